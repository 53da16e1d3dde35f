# app/config.py
"""
Typed experiment configuration (pydantic v2), stored as JSON.

Defaults are the full-scale hyperparameters (`paper` profile); the `desk` profile shrinks the replay
buffer and rescales the learning-rate horizon to the planned number of frames.
"""
from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from app.errors import ConfigError
from app.qnet import CLASSICAL_BASELINE

PROFILE_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "paper": {"buffer_capacity": 1_000_000, "schedule_frames": 10_000_000},
    "desk": {"buffer_capacity": 10_000, "schedule_frames": None},
}


class ArchitectureSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    arch: Literal["modified", "original"] = "modified"
    num_encoder_layers: int = Field(3, ge=1)
    num_qcnn_blocks: int = Field(2, ge=1)
    num_body_layers: int = Field(4, ge=1)
    dense_hidden: List[int] = Field(default_factory=lambda: [64, 64], min_length=1)
    conv_filters: List[int] = Field(default_factory=lambda: [8, 16], min_length=1)
    mlp_hidden: List[int] = Field(default_factory=lambda: [128, 64], min_length=1)

    def model_kwargs(self) -> Dict[str, Any]:
        """Keyword arguments for qnet.build_model; `original` forces one QCNN block and three body layers."""
        blocks, body = (1, 3) if self.arch == "original" else (self.num_qcnn_blocks, self.num_body_layers)
        return {
            "num_encoder_layers": self.num_encoder_layers,
            "num_qcnn_blocks": blocks,
            "num_body_layers": body,
            "dense_hidden": tuple(self.dense_hidden),
            "conv_filters": tuple(self.conv_filters),
            "mlp_hidden": tuple(self.mlp_hidden),
        }


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    variant: str = "D5Q"
    environment: str = "cartpole"
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2], min_length=1)
    episodes: int = Field(2000, ge=1)
    profile: Literal["paper", "desk"] = "paper"

    gamma: float = Field(0.99, ge=0.0, lt=1.0)
    batch_size: int = Field(32, ge=1)
    buffer_capacity: int = Field(1_000_000, ge=1)
    warmup: int = Field(500, ge=0)
    target_sync_every: int = Field(100, ge=1)

    epsilon_start: float = Field(1.0, ge=0.0, le=1.0)
    epsilon_decay: float = Field(0.99, gt=0.0, le=1.0)
    epsilon_min: float = Field(0.01, ge=0.0, le=1.0)

    learning_rate_start: float = Field(1e-3, gt=0.0)
    learning_rate_end: float = Field(1e-4, gt=0.0)
    # None: episodes x the environment's step cap
    schedule_frames: Optional[int] = Field(10_000_000, ge=1)

    checkpoint_every: int = Field(100, ge=1)
    summary_window: int = Field(50, ge=1)
    log_every: int = Field(10, ge=1)

    architecture: ArchitectureSettings = Field(default_factory=ArchitectureSettings)

    @field_validator("variant")
    @classmethod
    def _strip_variant(cls, v: str) -> str:
        v = v.strip()
        return v if v == CLASSICAL_BASELINE else v.upper()

    @field_validator("environment")
    @classmethod
    def _lower_env(cls, v: str) -> str:
        return v.strip().lower()

    @property
    def run_name(self) -> str:
        return f"{self.variant}_{self.environment}"


class VarianceStudyConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    circuit: Literal["RandomLayers", "QcnnAnsatz", "SingleRx"] = "RandomLayers"
    min_qubits: int = Field(2, ge=1)
    max_qubits: int = Field(8, ge=1)
    samples: int = 200
    # random-layer depth; None scales it with the register (4 layers per qubit)
    depth: Optional[int] = Field(None, ge=1)
    seed: int = 0

    def depth_for(self, num_qubits: int) -> int:
        return self.depth if self.depth is not None else 4 * num_qubits


ModelT = TypeVar("ModelT", bound=BaseModel)


def apply_profile(config: ExperimentConfig, profile: str) -> ExperimentConfig:
    if profile not in PROFILE_DEFAULTS:
        raise ConfigError(f"Unknown profile '{profile}'. Choose one of: {', '.join(PROFILE_DEFAULTS)}")
    return config.model_copy(update={"profile": profile, **PROFILE_DEFAULTS[profile]})


def with_overrides(config: ModelT, **overrides: Any) -> ModelT:
    """Copy with non-None overrides applied and re-validated."""
    data = config.model_dump()
    data.update({k: v for k, v in overrides.items() if v is not None})
    return _validate(type(config), data)


def _validate(cls: Type[ModelT], data: Any) -> ModelT:
    try:
        return cls.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid {cls.__name__}: {e}") from e


def load_config(path: str | Path, cls: Type[ModelT] = ExperimentConfig) -> ModelT:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        return cls.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ConfigError(f"Invalid {cls.__name__} in {path}: {e}") from e


def save_config(config: BaseModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(config.model_dump_json(indent=2), encoding="utf-8")
    return path
