# train_models.py
"""Desk-scale sweep: every variant code that fits each environment, plus the classical baseline."""
from app.config import ExperimentConfig, apply_profile
from app.errors import ConfigError
from app.pipeline import run_experiment
from app.qnet import CLASSICAL_BASELINE, VARIANT_CODES

SWEEP = {"cartpole": 300, "gridworld": 300, "catch": 1000}

for env, episodes in SWEEP.items():
    for variant in VARIANT_CODES + (CLASSICAL_BASELINE,):
        cfg = apply_profile(ExperimentConfig(variant=variant, environment=env, episodes=episodes), "desk")
        try:
            res = run_experiment(cfg, "outputs")
        except ConfigError as e:
            print(f"skip {variant} on {env}: {e}")
            continue
        for row in res.summary.itertuples(index=False):
            print(f"{row.variant}  {row.environment}  seed={row.seed}  trailing_mean={row.trailing_mean_return:.3f}")
