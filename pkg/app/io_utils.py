# app/io_utils.py
from __future__ import annotations

import shutil
from datetime import datetime
from pathlib import Path
from typing import Optional


def safe_replace_output(dest: Path, archive_dir: Optional[Path] = None) -> Optional[Path]:
    """
    Make room for a fresh output file at `dest`.
    If one already exists, move it into `<dest.parent>/archive` (or `archive_dir`)
    with a timestamped name. Returns the archived path, or None if nothing was there.
    """
    dest = Path(dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    if not dest.exists():
        return None

    archive = Path(archive_dir) if archive_dir is not None else dest.parent / "archive"
    archive.mkdir(parents=True, exist_ok=True)
    ts = datetime.now().strftime("%Y%m%d_%H%M%S_%f")
    archived = archive / f"{dest.stem}_{ts}{dest.suffix}"
    shutil.move(str(dest), archived)
    return archived


def run_dir(out_dir: Path, run_name: str) -> Path:
    """Output folder for one run: <out_dir>/<run_name>/ (created)."""
    path = Path(out_dir) / run_name
    path.mkdir(parents=True, exist_ok=True)
    return path
