# app/envs/base.py
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from app.errors import ArgumentError, EnvStateError


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: float
    terminal: bool


class EpisodicEnv:
    """Shared bookkeeping: seeded rng, step counter, terminal guard, action range check."""

    name: str = ""
    action_count: int = 0
    observation_shape: Tuple[int, ...] = ()
    max_steps: int = 0

    def __init__(self, seed: Optional[int] = None):
        self.rng = np.random.default_rng(seed)
        self.steps = 0
        self.done = True

    def _begin(self) -> None:
        self.steps = 0
        self.done = False

    def _check_step(self, action: int) -> int:
        if self.done:
            raise EnvStateError(f"{self.name}: step() called on a finished episode; call reset() first")
        try:
            a = int(action)
        except (TypeError, ValueError):
            raise ArgumentError(f"{self.name}: action {action!r} is not an integer")
        if a != action or not 0 <= a < self.action_count:
            raise ArgumentError(f"{self.name}: action {action!r} outside [0, {self.action_count})")
        self.steps += 1
        return a

    def _finish(self, observation: np.ndarray, reward: float, terminal: bool) -> StepResult:
        self.done = terminal
        return StepResult(observation, float(reward), bool(terminal))
