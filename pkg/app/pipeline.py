# app/pipeline.py
"""
Experiment harness: DDQN training runs, greedy evaluation from checkpoints,
gradient-variance studies and the gradient agreement check.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.agent import AgentConfig, DDQNAgent, ExplorationSchedule, greedy_return, run_episode
from app.circuits import (
    ArchitectureConfig,
    CircuitSpec,
    assemble_model_circuit,
    format_circuit,
    random_circuit,
)
from app.config import ExperimentConfig, VarianceStudyConfig
from app.db import (
    clear_checkpoints,
    get_conn,
    load_checkpoint,
    register_run,
    restore_params,
    save_checkpoint,
)
from app.envs import TrajectoryRecorder, make_env
from app.gradients import (
    SHIFT_CONSTANTS,
    grad_adjoint,
    grad_finite_difference,
    grad_parameter_shift,
)
from app.io_utils import run_dir, safe_replace_output
from app.qnet import QFunction, VariantId, build_model
from app.statevector import GateApplication, GateKind
from app.validate import require_valid

log = logging.getLogger(__name__)

METRIC_COLUMNS = ["episode", "frames", "return", "epsilon", "mean_loss", "wall_clock"]
SUMMARY_COLUMNS = [
    "variant", "environment", "seed", "episodes", "frames",
    "trailing_mean_return", "final_epsilon", "parameters", "quantum_parameters",
]
VARIANCE_COLUMNS = ["num_qubits", "variance", "mean", "samples", "reference"]
CHECKPOINT_DB = "checkpoints.sqlite"

# ---------------- Training ----------------

@dataclass
class SeedRun:
    seed: int
    metrics: pd.DataFrame
    model: QFunction
    csv_path: Optional[Path] = None


@dataclass
class ExperimentReport:
    run_name: str
    out_dir: Path
    runs: List[SeedRun]
    summary: pd.DataFrame
    summary_path: Optional[Path] = None

    @property
    def metrics_paths(self) -> List[Path]:
        return [r.csv_path for r in self.runs if r.csv_path is not None]


def _streams(seed: int) -> Tuple[np.random.Generator, np.random.Generator, int]:
    """(model-init rng, agent rng, env seed): independent streams derived from one seed."""
    init_ss, agent_ss, env_ss = np.random.SeedSequence(seed).spawn(3)
    return (np.random.default_rng(init_ss), np.random.default_rng(agent_ss),
            int(env_ss.generate_state(1)[0]))


def build_for_seed(config: ExperimentConfig, seed: int):
    """Fresh (env, model, agent rng) for one seed of a validated config."""
    init_rng, agent_rng, env_seed = _streams(seed)
    env = make_env(config.environment, seed=env_seed)
    model = build_model(config.variant, env.observation_shape, env.action_count, init_rng,
                        **config.architecture.model_kwargs())
    return env, model, agent_rng


def agent_config(config: ExperimentConfig, max_steps: int) -> AgentConfig:
    horizon = config.schedule_frames or config.episodes * max_steps
    return AgentConfig(
        gamma=config.gamma,
        batch_size=config.batch_size,
        buffer_capacity=config.buffer_capacity,
        warmup=config.warmup,
        target_sync_every=config.target_sync_every,
        learning_rate_start=config.learning_rate_start,
        learning_rate_end=config.learning_rate_end,
        schedule_steps=horizon,
    )


def train_seed(config: ExperimentConfig, seed: int, conn=None) -> SeedRun:
    env, model, agent_rng = build_for_seed(config, seed)
    agent = DDQNAgent(model, agent_config(config, env.max_steps), agent_rng)
    schedule = ExplorationSchedule(config.epsilon_start, config.epsilon_decay, config.epsilon_min)

    if conn is not None:
        clear_checkpoints(conn, config.run_name, seed)
    rows = []
    start = time.perf_counter()
    for episode in range(1, config.episodes + 1):
        result = run_episode(env, agent, schedule)
        rows.append({
            "episode": episode,
            "frames": agent.frames,
            "return": result.episode_return,
            "epsilon": result.epsilon,
            "mean_loss": result.mean_loss,
            "wall_clock": round(time.perf_counter() - start, 3),
        })
        if conn is not None and (episode % config.checkpoint_every == 0 or episode == config.episodes):
            save_checkpoint(conn, config.run_name, seed, episode, model.params)
        if episode % config.log_every == 0:
            recent = [r["return"] for r in rows[-config.log_every:]]
            log.info("%s seed=%d episode=%d frames=%d mean_return=%.3f epsilon=%.4f",
                     config.run_name, seed, episode, agent.frames, float(np.mean(recent)), result.epsilon)
    return SeedRun(seed, pd.DataFrame(rows, columns=METRIC_COLUMNS), model)


def summarize(config: ExperimentConfig, run: SeedRun) -> dict:
    m = run.metrics
    tail = m["return"].tail(config.summary_window)
    return {
        "variant": config.variant,
        "environment": config.environment,
        "seed": run.seed,
        "episodes": int(len(m)),
        "frames": int(m["frames"].iloc[-1]) if len(m) else 0,
        "trailing_mean_return": float(tail.mean()) if len(tail) else float("nan"),
        "final_epsilon": float(m["epsilon"].iloc[-1]) if len(m) else float("nan"),
        "parameters": run.model.parameter_count(),
        "quantum_parameters": run.model.quantum_parameter_count(),
    }


def run_experiment(config: ExperimentConfig, out_dir: str | Path, db_path: Optional[str | Path] = None) -> ExperimentReport:
    """
    Train every seed of `config`; writes <out_dir>/<run>/metrics_seed<k>.csv per seed,
    summary.csv, and checkpoints into the SQLite store. Raises ConfigError on invalid configs.
    """
    require_valid(config)
    folder = run_dir(Path(out_dir), config.run_name)
    conn = get_conn(Path(db_path) if db_path else Path(out_dir) / CHECKPOINT_DB)
    try:
        register_run(conn, config.run_name, config.variant, config.environment, config.model_dump_json())
        runs: List[SeedRun] = []
        for seed in config.seeds:
            log.info("training %s seed=%d for %d episodes", config.run_name, seed, config.episodes)
            run = train_seed(config, seed, conn)
            run.csv_path = folder / f"metrics_seed{seed}.csv"
            safe_replace_output(run.csv_path)
            run.metrics.to_csv(run.csv_path, index=False)
            runs.append(run)
    finally:
        conn.close()

    summary = pd.DataFrame([summarize(config, r) for r in runs], columns=SUMMARY_COLUMNS)
    summary_path = folder / "summary.csv"
    safe_replace_output(summary_path)
    summary.to_csv(summary_path, index=False)
    return ExperimentReport(config.run_name, folder, runs, summary, summary_path)


def evaluate(config: ExperimentConfig, out_dir: str | Path, seed: int, episodes: int = 10,
             db_path: Optional[str | Path] = None, trajectory_path: Optional[str | Path] = None) -> List[float]:
    """
    Greedy returns of the latest checkpoint for (config, seed). With `trajectory_path`,
    every step of every episode is also written there as a trajectory CSV.
    """
    require_valid(config)
    env, model, _ = build_for_seed(config, seed)
    conn = get_conn(Path(db_path) if db_path else Path(out_dir) / CHECKPOINT_DB)
    try:
        episode, params = load_checkpoint(conn, config.run_name, seed)
    finally:
        conn.close()
    restore_params(model.params, params)
    log.info("evaluating %s seed=%d from episode %d checkpoint", config.run_name, seed, episode)
    if trajectory_path is None:
        return [greedy_return(env, model) for _ in range(episodes)]
    recorder = TrajectoryRecorder(env)
    returns = [greedy_return(recorder, model) for _ in range(episodes)]
    recorder.write_csv(trajectory_path)
    return returns

# ---------------- Gradient variance ----------------

_ROTATIONS = (GateKind.RX, GateKind.RY, GateKind.RZ)


def random_layers_circuit(num_qubits: int, depth: int, rng: np.random.Generator) -> Tuple[CircuitSpec, np.ndarray]:
    """
    Ry(π/4) on every qubit, then `depth` layers of a random Pauli rotation per qubit and a CNOT ladder.
    Trainable slots come first (slot 0 is the first rotation on qubit 0); the fixed Ry slots follow.
    """
    trainable = depth * num_qubits
    gates = [GateApplication(GateKind.RY, (q,), trainable + q) for q in range(num_qubits)]
    for layer in range(depth):
        for q in range(num_qubits):
            kind = _ROTATIONS[int(rng.integers(len(_ROTATIONS)))]
            gates.append(GateApplication(kind, (q,), layer * num_qubits + q))
        for q in range(num_qubits - 1):
            gates.append(GateApplication(GateKind.CNOT, (q, q + 1)))
    circuit = CircuitSpec(num_qubits, tuple(gates), trainable + num_qubits, (0,), frozenset(range(num_qubits)))
    params = np.concatenate([rng.uniform(0.0, 2 * np.pi, trainable), np.full(num_qubits, np.pi / 4)])
    return circuit, params


def single_rx_circuit(num_qubits: int = 1) -> CircuitSpec:
    return CircuitSpec(num_qubits, (GateApplication(GateKind.RX, (0,), 0),), 1, (0,), frozenset(range(num_qubits)))


def _family_uniform(circuit: CircuitSpec, rng: np.random.Generator) -> np.ndarray:
    fams = circuit.slot_families()
    return np.array([rng.uniform(0.0, 2 * np.pi) if f == "rotation" else rng.uniform(0.0, 2.0) for f in fams])


def sample_gradients(circuit_kind: str, num_qubits: int, samples: int, depth: int,
                     rng: np.random.Generator) -> np.ndarray:
    """`samples` draws of the first trainable slot's gradient of <Z> on the first readout qubit."""
    out = np.empty(samples)
    if circuit_kind == "QcnnAnsatz":
        circuit = assemble_model_circuit(ArchitectureConfig(num_qubits=num_qubits), action_count=2)
        slot, readout = circuit.num_encoder_params, circuit.readout_qubits[0]
        for k in range(samples):
            out[k] = grad_adjoint(circuit, _family_uniform(circuit, rng), readout)[slot]
    elif circuit_kind == "SingleRx":
        circuit = single_rx_circuit(num_qubits)
        for k in range(samples):
            out[k] = grad_adjoint(circuit, rng.uniform(0.0, 2 * np.pi, 1), 0)[0]
    else:
        for k in range(samples):
            circuit, params = random_layers_circuit(num_qubits, depth, rng)
            out[k] = grad_adjoint(circuit, params, 0)[0]
    return out


def measure_gradient_variance(config: VarianceStudyConfig) -> pd.DataFrame:
    """
    One row per qubit count: sample variance of the gradient, its mean, and the
    exponential reference var(n0)·2^-(n - n0) anchored at the smallest register.
    """
    require_valid(config)
    rng = np.random.default_rng(config.seed)
    rows = []
    for n in range(config.min_qubits, config.max_qubits + 1):
        g = sample_gradients(config.circuit, n, config.samples, config.depth_for(n), rng)
        rows.append({"num_qubits": n, "variance": float(np.var(g, ddof=1)), "mean": float(np.mean(g)),
                     "samples": config.samples})
        log.info("variance study %s n=%d variance=%.3e", config.circuit, n, rows[-1]["variance"])
    table = pd.DataFrame(rows)
    base = table["variance"].iloc[0]
    table["reference"] = base * 2.0 ** -(table["num_qubits"] - config.min_qubits)
    return table[VARIANCE_COLUMNS]

# ---------------- Gradient agreement ----------------

@dataclass
class GradCheckReport:
    circuits: int = 0
    slots_checked: int = 0
    max_adjoint_vs_shift: float = 0.0
    max_vs_finite_difference: float = 0.0
    worst_circuit: Optional[int] = None
    worst_slot: Optional[int] = None
    shift_tolerance: float = 1e-8
    fd_tolerance: float = 1e-5
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def lines(self) -> List[str]:
        out = [
            f"circuits={self.circuits} slots_checked={self.slots_checked}",
            f"max |adjoint - shift| = {self.max_adjoint_vs_shift:.3e} (tol {self.shift_tolerance:g})",
            f"max |exact - finite difference| = {self.max_vs_finite_difference:.3e} (tol {self.fd_tolerance:g})",
        ]
        out.extend(self.failures)
        return out


def random_check_circuits(count: int, rng: np.random.Generator, max_qubits: int = 6,
                          max_slots: int = 30) -> Iterable[Tuple[CircuitSpec, np.ndarray, int]]:
    for _ in range(count):
        n = int(rng.integers(1, max_qubits + 1))
        slots = int(rng.integers(0, max_slots + 1))
        circuit = random_circuit(rng, n, slots, num_gates=max(slots, 1) + int(rng.integers(0, 15)))
        yield circuit, rng.uniform(-np.pi, np.pi, slots), int(rng.integers(n))


def grad_check(num_circuits: int = 100, seed: int = 0, corrupt_shift: Optional[float] = None,
               cases: Optional[Sequence[Tuple[CircuitSpec, np.ndarray, int]]] = None,
               max_qubits: int = 6, max_slots: int = 30) -> GradCheckReport:
    """
    Adjoint vs parameter shift vs central differences on random circuits (or `cases`).
    `corrupt_shift` multiplies the rotation shift constant to inject a fault.
    """
    consts = None if corrupt_shift is None else {"rotation": SHIFT_CONSTANTS["rotation"] * corrupt_shift}
    report = GradCheckReport()
    if cases is None:
        cases = list(random_check_circuits(num_circuits, np.random.default_rng(seed), max_qubits, max_slots))

    for idx, (circuit, params, readout) in enumerate(cases):
        report.circuits += 1
        report.slots_checked += circuit.num_params
        if circuit.num_params == 0:
            continue
        adj = grad_adjoint(circuit, params, readout)
        shift = grad_parameter_shift(circuit, params, readout, shift_constants=consts)
        fd = grad_finite_difference(circuit, params, readout)

        dev_shift = np.abs(adj - shift)
        dev_fd = np.maximum(np.abs(adj - fd), np.abs(shift - fd))
        j = int(np.argmax(dev_shift))
        if dev_shift[j] > report.max_adjoint_vs_shift:
            report.max_adjoint_vs_shift = float(dev_shift[j])
            report.worst_circuit, report.worst_slot = idx, j
        report.max_vs_finite_difference = max(report.max_vs_finite_difference, float(dev_fd.max()))
        if dev_shift[j] > report.shift_tolerance:
            report.failures.append(f"FAIL circuit {idx} slot {j}: |adjoint - shift| = {dev_shift[j]:.3e}")
        k = int(np.argmax(dev_fd))
        if dev_fd[k] > report.fd_tolerance:
            report.failures.append(f"FAIL circuit {idx} slot {k}: |exact - finite difference| = {dev_fd[k]:.3e}")
    return report

# ---------------- Circuit listing ----------------

def describe_circuit(variant: str, environment: str, arch: str = "modified") -> str:
    v = VariantId.parse(variant)
    env = make_env(environment)
    cfg = (ArchitectureConfig.original(v.num_qubits, v.head) if arch == "original"
           else ArchitectureConfig(num_qubits=v.num_qubits, output_head=v.head))
    return format_circuit(assemble_model_circuit(cfg, env.action_count))
