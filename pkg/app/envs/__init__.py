# app/envs/__init__.py
from __future__ import annotations

from typing import Dict, Optional, Type

from app.envs.base import EpisodicEnv, StepResult
from app.envs.cartpole import CartPole
from app.envs.catch import Catch, random_policy_expected_return
from app.envs.gridworld import Gridworld
from app.envs.recorder import TrajectoryRecorder
from app.errors import ConfigError

ENVIRONMENTS: Dict[str, Type[EpisodicEnv]] = {
    "cartpole": CartPole,
    "gridworld": Gridworld,
    "catch": Catch,
}
PIXEL_ENVIRONMENTS = frozenset({"catch"})


def make_env(name: str, seed: Optional[int] = None) -> EpisodicEnv:
    try:
        cls = ENVIRONMENTS[name.lower()]
    except KeyError:
        raise ConfigError(f"Unknown environment '{name}'. Choose one of: {', '.join(ENVIRONMENTS)}")
    return cls(seed=seed)


__all__ = [
    "CartPole", "Catch", "Gridworld", "EpisodicEnv", "StepResult", "TrajectoryRecorder",
    "ENVIRONMENTS", "PIXEL_ENVIRONMENTS", "make_env", "random_policy_expected_return",
]
