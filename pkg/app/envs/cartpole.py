# app/envs/cartpole.py
"""Classic cart-pole balancing with Euler integration (classic-control constants)."""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from app.envs.base import EpisodicEnv, StepResult
from app.errors import ArgumentError

GRAVITY = 9.8
CART_MASS = 1.0
POLE_MASS = 0.1
TOTAL_MASS = CART_MASS + POLE_MASS
HALF_LENGTH = 0.5
POLE_MASS_LENGTH = POLE_MASS * HALF_LENGTH
FORCE_MAG = 10.0
TAU = 0.02
THETA_LIMIT = 12 * 2 * math.pi / 360
X_LIMIT = 2.4


class CartPole(EpisodicEnv):
    """Observation: cart position, cart velocity, pole angle, pole angular velocity. Actions: 0 push left, 1 push right."""

    name = "cartpole"
    action_count = 2
    observation_shape = (4,)
    max_steps = 200

    def __init__(self, seed: Optional[int] = None, max_steps: int = 200):
        super().__init__(seed)
        self.max_steps = max_steps
        self.state = np.zeros(4)

    def reset(self, initial_state: Optional[Sequence[float]] = None) -> np.ndarray:
        if initial_state is None:
            self.state = self.rng.uniform(-0.05, 0.05, size=4)
        else:
            s = np.asarray(initial_state, dtype=float)
            if s.shape != (4,):
                raise ArgumentError(f"cartpole: initial state must have 4 values, got shape {s.shape}")
            self.state = s.copy()
        self._begin()
        return self.state.copy()

    def step(self, action: int) -> StepResult:
        a = self._check_step(action)
        x, x_dot, theta, theta_dot = self.state
        force = FORCE_MAG if a == 1 else -FORCE_MAG
        cos_t, sin_t = math.cos(theta), math.sin(theta)

        temp = (force + POLE_MASS_LENGTH * theta_dot ** 2 * sin_t) / TOTAL_MASS
        theta_acc = (GRAVITY * sin_t - cos_t * temp) / (
            HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos_t ** 2 / TOTAL_MASS)
        )
        x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_t / TOTAL_MASS

        x = x + TAU * x_dot
        x_dot = x_dot + TAU * x_acc
        theta = theta + TAU * theta_dot
        theta_dot = theta_dot + TAU * theta_acc
        self.state = np.array([x, x_dot, theta, theta_dot])

        fell = abs(x) > X_LIMIT or abs(theta) > THETA_LIMIT
        return self._finish(self.state.copy(), 1.0, fell or self.steps >= self.max_steps)
