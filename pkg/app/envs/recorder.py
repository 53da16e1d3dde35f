# app/envs/recorder.py
from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Dict, List

import numpy as np
import pandas as pd

from app.envs.base import StepResult
from app.io_utils import safe_replace_output

TRAJECTORY_COLUMNS = ["t", "obs_hash", "action", "reward", "terminal"]


def observation_hash(observation) -> str:
    data = np.ascontiguousarray(np.asarray(observation, dtype=np.float64))
    return hashlib.sha1(data.tobytes()).hexdigest()[:16]


class TrajectoryRecorder:
    """
    Wraps an environment and logs one row per step:
      t, obs_hash (of the observation the action was taken in), action, reward, terminal
    """

    def __init__(self, env):
        self.env = env
        self.rows: List[Dict] = []
        self._obs = None
        self._t = 0

    def __getattr__(self, name):
        if name == "env":
            raise AttributeError(name)
        return getattr(self.env, name)

    def reset(self, *args, **kwargs) -> np.ndarray:
        self._obs = self.env.reset(*args, **kwargs)
        self._t = 0
        return self._obs

    def step(self, action: int) -> StepResult:
        result = self.env.step(action)
        self.rows.append({
            "t": self._t,
            "obs_hash": observation_hash(self._obs),
            "action": int(action),
            "reward": result.reward,
            "terminal": result.terminal,
        })
        self._t += 1
        self._obs = result.observation
        return result

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=TRAJECTORY_COLUMNS)

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        safe_replace_output(path)
        self.to_frame().to_csv(path, index=False)
        return path
