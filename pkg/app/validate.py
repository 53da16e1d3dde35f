# app/validate.py
from __future__ import annotations

from typing import List

from app.circuits import OutputHead
from app.config import CLASSICAL_BASELINE, ExperimentConfig, VarianceStudyConfig
from app.envs import ENVIRONMENTS, PIXEL_ENVIRONMENTS
from app.errors import ConfigError
from app.qnet import EncoderKind, VariantId
from app.statevector import MAX_QUBITS

MIN_VARIANCE_SAMPLES = 30

# ---------------------------------------------------------------------
# Experiment configs
# ---------------------------------------------------------------------
def validate_experiment(config: ExperimentConfig) -> List[str]:
    """
    Cross-field checks pydantic cannot express on its own.
    Returns a list of human-readable error messages (empty list = OK).
    """
    errors: List[str] = []

    # 1) Environment known?
    env_cls = ENVIRONMENTS.get(config.environment)
    if env_cls is None:
        errors.append(f"Unknown environment '{config.environment}'. Choose one of: {', '.join(ENVIRONMENTS)}")

    # 2) Variant parses and fits the environment
    if config.variant != CLASSICAL_BASELINE:
        try:
            v = VariantId.parse(config.variant)
        except ConfigError as e:
            errors.append(str(e))
            v = None
        if v is not None:
            if not 3 <= v.num_qubits <= MAX_QUBITS:
                errors.append(f"{v.code}: num_qubits must be in [3, {MAX_QUBITS}]")
            if v.encoder is EncoderKind.CONV and config.environment not in PIXEL_ENVIRONMENTS:
                errors.append(
                    f"{v.code}: convolutional encoders need a pixel environment "
                    f"({', '.join(sorted(PIXEL_ENVIRONMENTS))}), got '{config.environment}'"
                )
            if env_cls is not None and v.head is OutputHead.QUANTUM_POOLING and env_cls.action_count > v.num_qubits:
                errors.append(
                    f"{v.code}: quantum pooling head needs >= {env_cls.action_count} qubits for '{config.environment}'"
                )

    # 3) Seeds and RL hyperparameters
    if len(set(config.seeds)) != len(config.seeds):
        errors.append(f"Duplicate seeds: {config.seeds}")
    if config.buffer_capacity < config.batch_size:
        errors.append(f"buffer_capacity {config.buffer_capacity} is smaller than batch_size {config.batch_size}")
    if config.epsilon_min > config.epsilon_start:
        errors.append(f"epsilon_min {config.epsilon_min} exceeds epsilon_start {config.epsilon_start}")
    if config.learning_rate_end > config.learning_rate_start:
        errors.append("learning_rate_end should not exceed learning_rate_start")

    return errors


# ---------------------------------------------------------------------
# Variance studies
# ---------------------------------------------------------------------
def validate_variance_study(config: VarianceStudyConfig) -> List[str]:
    errors: List[str] = []
    if config.samples < MIN_VARIANCE_SAMPLES:
        errors.append(f"samples per point must be >= {MIN_VARIANCE_SAMPLES}, got {config.samples}")
    if config.min_qubits > config.max_qubits:
        errors.append(f"min_qubits {config.min_qubits} > max_qubits {config.max_qubits}")
    if config.max_qubits > MAX_QUBITS:
        errors.append(f"max_qubits {config.max_qubits} exceeds the simulator limit {MAX_QUBITS}")
    if config.circuit == "RandomLayers" and config.min_qubits < 2:
        errors.append("RandomLayers needs at least 2 qubits")
    if config.circuit == "QcnnAnsatz" and config.min_qubits < 3:
        errors.append("QcnnAnsatz needs at least 3 qubits")
    return errors


# ---------------------------------------------------------------------
# Convenience: validate and raise
# ---------------------------------------------------------------------
def require_valid(config) -> None:
    """Raise ConfigError listing every problem found."""
    if isinstance(config, ExperimentConfig):
        errs = validate_experiment(config)
    elif isinstance(config, VarianceStudyConfig):
        errs = validate_variance_study(config)
    else:
        raise ConfigError(f"Cannot validate {type(config).__name__}")
    if errs:
        raise ConfigError("; ".join(errs))
