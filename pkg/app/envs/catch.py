# app/envs/catch.py
"""
Pixel Catch: a ball falls one row per step from a random column of the top row while a
3-pixel paddle slides along the bottom row. The episode ends when the ball reaches the
bottom row (size - 1 steps): +1 if it lands on the paddle, -1 otherwise.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from app.envs.base import EpisodicEnv, StepResult
from app.errors import ArgumentError

LEFT, STAY, RIGHT = 0, 1, 2
PADDLE_HALF_WIDTH = 1


class Catch(EpisodicEnv):
    name = "catch"
    action_count = 3

    def __init__(self, seed: Optional[int] = None, size: int = 8):
        super().__init__(seed)
        if size < 3:
            raise ArgumentError(f"catch: board size must be >= 3, got {size}")
        self.size = size
        self.max_steps = size - 1
        self.observation_shape = (size, size, 1)
        self.ball_row = 0
        self.ball_column = 0
        self.paddle = start_paddle(size)

    def _observe(self) -> np.ndarray:
        board = np.zeros(self.observation_shape)
        board[self.ball_row, self.ball_column, 0] = 1.0
        lo, hi = self.paddle - PADDLE_HALF_WIDTH, self.paddle + PADDLE_HALF_WIDTH
        board[self.size - 1, lo:hi + 1, 0] = 1.0
        return board

    def reset(self, ball_column: Optional[int] = None) -> np.ndarray:
        if ball_column is None:
            ball_column = int(self.rng.integers(self.size))
        if not 0 <= ball_column < self.size:
            raise ArgumentError(f"catch: ball column {ball_column} outside [0, {self.size})")
        self.ball_row = 0
        self.ball_column = ball_column
        self.paddle = start_paddle(self.size)
        self._begin()
        return self._observe()

    def step(self, action: int) -> StepResult:
        a = self._check_step(action)
        self.paddle = move_paddle(self.paddle, a - 1, self.size)
        self.ball_row += 1
        if self.ball_row < self.size - 1:
            return self._finish(self._observe(), 0.0, False)
        caught = abs(self.ball_column - self.paddle) <= PADDLE_HALF_WIDTH
        return self._finish(self._observe(), 1.0 if caught else -1.0, True)


def start_paddle(size: int) -> int:
    return (size - 1) // 2


def move_paddle(center: int, delta: int, size: int) -> int:
    return min(max(center + delta, PADDLE_HALF_WIDTH), size - 1 - PADDLE_HALF_WIDTH)


def random_policy_expected_return(size: int = 8) -> float:
    """
    Exact expected return of the uniform random policy: propagate the paddle-centre
    distribution through size - 1 uniform moves, then average the outcome over ball columns.
    """
    dist = np.zeros(size)
    dist[start_paddle(size)] = 1.0
    for _ in range(size - 1):
        nxt = np.zeros(size)
        for center, p in enumerate(dist):
            if p == 0.0:
                continue
            for delta in (-1, 0, 1):
                nxt[move_paddle(center, delta, size)] += p / 3.0
        dist = nxt
    total = 0.0
    for column in range(size):
        p_catch = sum(dist[c] for c in range(size) if abs(column - c) <= PADDLE_HALF_WIDTH)
        total += 2.0 * p_catch - 1.0
    return total / size
