# app/db.py
"""
SQLite checkpoint store. Arrays are kept as little-endian float64 bytes plus a JSON
shape, one row per parameter array; nothing is pickled.
"""
from __future__ import annotations

import json
import sqlite3
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from app.errors import ShapeError

FORMAT_VERSION = 1
DTYPE = "<f8"

BASE_SCHEMA = """
PRAGMA foreign_keys = ON;

CREATE TABLE IF NOT EXISTS runs (
  id TEXT PRIMARY KEY,
  variant TEXT NOT NULL,
  environment TEXT NOT NULL,
  config_json TEXT NOT NULL,
  created_at TEXT NOT NULL
);

CREATE TABLE IF NOT EXISTS checkpoints (
  id INTEGER PRIMARY KEY,
  run_id TEXT NOT NULL,
  seed INTEGER NOT NULL,
  episode INTEGER NOT NULL,
  grp TEXT NOT NULL,
  name TEXT NOT NULL,
  shape_json TEXT NOT NULL,
  dtype TEXT NOT NULL,
  data BLOB NOT NULL,
  updated_at TEXT NOT NULL,
  FOREIGN KEY(run_id) REFERENCES runs(id) ON DELETE CASCADE
);
CREATE INDEX IF NOT EXISTS idx_ckpt_run ON checkpoints(run_id, seed);
"""


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def get_conn(db_path: str | Path) -> sqlite3.Connection:
    db_path = Path(db_path)
    db_path.parent.mkdir(parents=True, exist_ok=True)
    conn = sqlite3.connect(db_path)
    conn.execute("PRAGMA foreign_keys = ON;")
    conn.executescript(BASE_SCHEMA)
    _migrate(conn)
    return conn

# ------------------------ Migrations ------------------------

def _column_exists(conn: sqlite3.Connection, table: str, col: str) -> bool:
    cur = conn.execute(f"PRAGMA table_info({table})")
    return any(row[1] == col for row in cur.fetchall())


def _migrate(conn: sqlite3.Connection) -> None:
    """v2: per-row format version; one row per (run, seed, episode, name)."""
    if not _column_exists(conn, "checkpoints", "format_version"):
        conn.execute(f"ALTER TABLE checkpoints ADD COLUMN format_version INTEGER NOT NULL DEFAULT {FORMAT_VERSION}")
    conn.execute(
        "CREATE UNIQUE INDEX IF NOT EXISTS uq_ckpt_key ON checkpoints(run_id, seed, episode, name)"
    )
    conn.commit()

# ------------------------ Runs ------------------------

def register_run(conn: sqlite3.Connection, run_id: str, variant: str, environment: str, config_json: str) -> None:
    conn.execute(
        """
        INSERT INTO runs(id, variant, environment, config_json, created_at) VALUES (?,?,?,?,?)
        ON CONFLICT(id) DO UPDATE SET
          variant=excluded.variant, environment=excluded.environment, config_json=excluded.config_json
        """,
        (run_id, variant, environment, config_json, _now()),
    )
    conn.commit()


def run_config_json(conn: sqlite3.Connection, run_id: str) -> Optional[str]:
    row = conn.execute("SELECT config_json FROM runs WHERE id = ?", (run_id,)).fetchone()
    return row[0] if row else None

# ------------------------ Checkpoints ------------------------

def save_checkpoint(conn: sqlite3.Connection, run_id: str, seed: int, episode: int,
                    params: Dict[str, np.ndarray]) -> int:
    """Upsert every parameter array; returns the number of rows written."""
    rows = []
    ts = _now()
    for name, arr in params.items():
        a = np.ascontiguousarray(arr, dtype=DTYPE)
        rows.append((run_id, seed, episode, name.split(".")[0], name, json.dumps(list(a.shape)),
                     DTYPE, a.tobytes(), FORMAT_VERSION, ts))
    conn.executemany(
        """
        INSERT INTO checkpoints(run_id, seed, episode, grp, name, shape_json, dtype, data, format_version, updated_at)
        VALUES (?,?,?,?,?,?,?,?,?,?)
        ON CONFLICT(run_id, seed, episode, name) DO UPDATE SET
          grp=excluded.grp, shape_json=excluded.shape_json, dtype=excluded.dtype,
          data=excluded.data, format_version=excluded.format_version, updated_at=excluded.updated_at
        """,
        rows,
    )
    conn.commit()
    return len(rows)


def clear_checkpoints(conn: sqlite3.Connection, run_id: str, seed: int) -> int:
    """Delete every checkpoint row of (run, seed); returns the number of rows removed."""
    cur = conn.execute("DELETE FROM checkpoints WHERE run_id = ? AND seed = ?", (run_id, seed))
    conn.commit()
    return cur.rowcount


def latest_episode(conn: sqlite3.Connection, run_id: str, seed: int) -> Optional[int]:
    row = conn.execute(
        "SELECT MAX(episode) FROM checkpoints WHERE run_id = ? AND seed = ?", (run_id, seed)
    ).fetchone()
    return None if row is None or row[0] is None else int(row[0])


def load_checkpoint(conn: sqlite3.Connection, run_id: str, seed: int,
                    episode: Optional[int] = None) -> Tuple[int, Dict[str, np.ndarray]]:
    """(episode, params) for the given episode, or the latest one when `episode` is None."""
    if episode is None:
        episode = latest_episode(conn, run_id, seed)
        if episode is None:
            raise LookupError(f"No checkpoints for run '{run_id}' seed {seed}")
    cur = conn.execute(
        "SELECT name, shape_json, dtype, data, format_version FROM checkpoints "
        "WHERE run_id = ? AND seed = ? AND episode = ? ORDER BY name",
        (run_id, seed, episode),
    )
    params: Dict[str, np.ndarray] = {}
    for name, shape_json, dtype, data, version in cur.fetchall():
        if version != FORMAT_VERSION:
            raise ShapeError(f"Checkpoint '{name}' has format version {version}, expected {FORMAT_VERSION}")
        shape = tuple(json.loads(shape_json))
        arr = np.frombuffer(data, dtype=dtype)
        if arr.size != int(np.prod(shape)):
            raise ShapeError(f"Checkpoint '{name}' holds {arr.size} values for shape {shape}")
        params[name] = arr.reshape(shape).astype(float)
    if not params:
        raise LookupError(f"No checkpoint rows for run '{run_id}' seed {seed} episode {episode}")
    return episode, params


def restore_params(model_params: Dict[str, np.ndarray], loaded: Dict[str, np.ndarray]) -> None:
    """Copy `loaded` into `model_params` in place after checking names and shapes."""
    missing = sorted(set(model_params) - set(loaded))
    extra = sorted(set(loaded) - set(model_params))
    if missing or extra:
        raise ShapeError(f"Checkpoint does not match model: missing {missing}, unexpected {extra}")
    for name, arr in loaded.items():
        if arr.shape != model_params[name].shape:
            raise ShapeError(f"Checkpoint '{name}' has shape {arr.shape}, model expects {model_params[name].shape}")
    for name, arr in loaded.items():
        model_params[name][...] = arr
