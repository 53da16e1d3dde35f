# app/optim.py
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from app.errors import ShapeError

Params = Dict[str, np.ndarray]


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: Params = field(default_factory=dict)
    second_moment: Params = field(default_factory=dict)


def adam_step(params: Params, grads: Params, state: AdamState, learning_rate: float) -> Params:
    """
    Bias-corrected Adam update, applied in place to every array in `params`.
    Returns `params` for chaining.
    """
    for name, p in params.items():
        g = grads.get(name)
        if g is None or np.shape(g) != p.shape:
            raise ShapeError(f"Gradient for '{name}' has shape {np.shape(g)}, parameter has {p.shape}")
        for moments in (state.first_moment, state.second_moment):
            if name in moments and moments[name].shape != p.shape:
                raise ShapeError(f"Adam moments for '{name}' have shape {moments[name].shape}, parameter has {p.shape}")

    state.step_count += 1
    bc1 = 1.0 - state.beta1 ** state.step_count
    bc2 = 1.0 - state.beta2 ** state.step_count
    for name, p in params.items():
        g = grads[name]
        m = state.first_moment.setdefault(name, np.zeros_like(p))
        v = state.second_moment.setdefault(name, np.zeros_like(p))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return params


def linear_schedule(fraction: float, start: float = 1e-3, end: float = 1e-4) -> float:
    """Linear decay from `start` to `end` over training progress `fraction` (clamped to [0, 1])."""
    f = min(max(fraction, 0.0), 1.0)
    return start + (end - start) * f
