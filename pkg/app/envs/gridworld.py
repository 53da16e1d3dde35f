# app/envs/gridworld.py
from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from app.envs.base import EpisodicEnv, StepResult

UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3
MOVES = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1)}

GOAL_REWARD = 1.0
STEP_PENALTY = -0.01


class Gridworld(EpisodicEnv):
    """Deterministic 4x4 grid, start (0,0), goal (3,3). Walls clamp. One-hot observation of the agent cell."""

    name = "gridworld"
    action_count = 4
    max_steps = 50

    def __init__(self, seed: Optional[int] = None, size: int = 4, max_steps: int = 50):
        super().__init__(seed)
        self.size = size
        self.max_steps = max_steps
        self.observation_shape = (size * size,)
        self.goal = (size - 1, size - 1)
        self.position: Tuple[int, int] = (0, 0)

    def _observe(self) -> np.ndarray:
        obs = np.zeros(self.size * self.size)
        obs[self.position[0] * self.size + self.position[1]] = 1.0
        return obs

    def reset(self) -> np.ndarray:
        self.position = (0, 0)
        self._begin()
        return self._observe()

    def step(self, action: int) -> StepResult:
        a = self._check_step(action)
        dr, dc = MOVES[a]
        row = min(max(self.position[0] + dr, 0), self.size - 1)
        col = min(max(self.position[1] + dc, 0), self.size - 1)
        self.position = (row, col)
        if self.position == self.goal:
            return self._finish(self._observe(), GOAL_REWARD, True)
        return self._finish(self._observe(), STEP_PENALTY, self.steps >= self.max_steps)


def optimal_return(size: int = 4) -> float:
    """Return of a shortest path: (path length - 1) penalties, then the goal reward."""
    return GOAL_REWARD + STEP_PENALTY * (2 * (size - 1) - 1)
