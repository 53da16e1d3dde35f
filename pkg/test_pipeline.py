import numpy as np
import pandas as pd
import pytest

from app.circuits import CircuitSpec
from app.config import (
    ExperimentConfig,
    VarianceStudyConfig,
    apply_profile,
    load_config,
    save_config,
    with_overrides,
)
from app.db import get_conn, latest_episode
from app.envs import random_policy_expected_return
from app.errors import ConfigError
from app.pipeline import (
    CHECKPOINT_DB,
    METRIC_COLUMNS,
    SUMMARY_COLUMNS,
    evaluate,
    grad_check,
    measure_gradient_variance,
    random_layers_circuit,
    run_experiment,
)
from app.validate import validate_experiment, validate_variance_study


def _tiny(**overrides):
    base = dict(variant="ClassicalMLP", environment="gridworld", seeds=[0, 1], episodes=3,
                batch_size=8, warmup=16, checkpoint_every=2, buffer_capacity=1000)
    base.update(overrides)
    return ExperimentConfig(**base)

# ---------------- Config ----------------

def test_full_scale_defaults():
    cfg = ExperimentConfig()
    assert (cfg.gamma, cfg.batch_size, cfg.buffer_capacity) == (0.99, 32, 1_000_000)
    assert (cfg.epsilon_start, cfg.epsilon_decay, cfg.epsilon_min) == (1.0, 0.99, 0.01)
    assert (cfg.learning_rate_start, cfg.learning_rate_end) == (1e-3, 1e-4)
    assert cfg.seeds == [0, 1, 2]


def test_desk_profile():
    cfg = apply_profile(ExperimentConfig(), "desk")
    assert cfg.buffer_capacity == 10_000
    assert cfg.schedule_frames is None
    with pytest.raises(ConfigError):
        apply_profile(cfg, "cluster")


def test_config_round_trip(tmp_path):
    cfg = with_overrides(ExperimentConfig(), variant="c5q", environment="Catch", episodes=77)
    assert cfg.variant == "C5Q" and cfg.environment == "catch"
    path = save_config(cfg, tmp_path / "cfg.json")
    assert load_config(path) == cfg
    vcfg = VarianceStudyConfig(circuit="QcnnAnsatz", min_qubits=3, max_qubits=5)
    assert load_config(save_config(vcfg, tmp_path / "v.json"), VarianceStudyConfig) == vcfg


def test_config_rejects_bad_values(tmp_path):
    with pytest.raises(ConfigError):
        with_overrides(ExperimentConfig(), gamma=1.0)
    bad = tmp_path / "bad.json"
    bad.write_text('{"batch_size": 0}', encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")

# ---------------- Validation ----------------

def test_conv_variant_needs_pixels():
    errs = validate_experiment(ExperimentConfig(variant="C5Q", environment="cartpole"))
    assert any("pixel" in e for e in errs)
    assert validate_experiment(ExperimentConfig(variant="C5Q", environment="catch")) == []
    assert validate_experiment(ExperimentConfig(variant="D5D", environment="cartpole")) == []
    assert validate_experiment(ExperimentConfig(variant="ClassicalMLP")) == []


def test_other_validation_rules():
    assert validate_experiment(ExperimentConfig(variant="Z9Q"))
    assert validate_experiment(ExperimentConfig(environment="pong"))
    assert validate_experiment(ExperimentConfig(seeds=[1, 1]))
    assert validate_experiment(ExperimentConfig(variant="D3Q", environment="gridworld"))
    assert validate_variance_study(VarianceStudyConfig(samples=10))
    assert validate_variance_study(VarianceStudyConfig(circuit="QcnnAnsatz", min_qubits=2))
    assert validate_variance_study(VarianceStudyConfig()) == []


def test_run_experiment_rejects_conv_on_cartpole(tmp_path):
    with pytest.raises(ConfigError):
        run_experiment(ExperimentConfig(variant="C5Q", environment="cartpole"), tmp_path)

# ---------------- Training runs ----------------

def test_run_experiment_writes_metrics_and_summary(tmp_path):
    report = run_experiment(_tiny(), tmp_path)
    assert len(report.metrics_paths) == 2
    for path in report.metrics_paths:
        df = pd.read_csv(path)
        assert list(df.columns) == METRIC_COLUMNS
        assert df["episode"].tolist() == [1, 2, 3]
        assert df["frames"].is_monotonic_increasing
    summary = pd.read_csv(report.summary_path)
    assert list(summary.columns) == SUMMARY_COLUMNS
    assert summary["seed"].tolist() == [0, 1]


def test_identical_config_gives_identical_metrics(tmp_path):
    a = run_experiment(_tiny(seeds=[4]), tmp_path / "a")
    b = run_experiment(_tiny(seeds=[4]), tmp_path / "b")
    da = pd.read_csv(a.metrics_paths[0]).drop(columns=["wall_clock"])
    db = pd.read_csv(b.metrics_paths[0]).drop(columns=["wall_clock"])
    pd.testing.assert_frame_equal(da, db)


def test_rerun_archives_previous_outputs(tmp_path):
    run_experiment(_tiny(seeds=[0]), tmp_path)
    run_experiment(_tiny(seeds=[0]), tmp_path)
    archived = list((tmp_path / "ClassicalMLP_gridworld" / "archive").glob("metrics_seed0_*.csv"))
    assert len(archived) == 1


def test_evaluate_uses_latest_checkpoint(tmp_path):
    cfg = _tiny(seeds=[0])
    run_experiment(cfg, tmp_path)
    returns = evaluate(cfg, tmp_path, seed=0, episodes=3)
    assert len(returns) == 3
    assert all(-0.5 - 1e-9 <= r <= 0.95 + 1e-9 for r in returns)


def test_shorter_rerun_replaces_checkpoints(tmp_path):
    run_experiment(_tiny(seeds=[0], episodes=4), tmp_path)
    run_experiment(_tiny(seeds=[0], episodes=2), tmp_path)
    conn = get_conn(tmp_path / CHECKPOINT_DB)
    try:
        assert latest_episode(conn, "ClassicalMLP_gridworld", 0) == 2
    finally:
        conn.close()


def test_evaluate_without_checkpoint(tmp_path):
    with pytest.raises(LookupError):
        evaluate(_tiny(seeds=[0]), tmp_path, seed=0)


@pytest.mark.slow
def test_hybrid_run_has_same_schema(tmp_path):
    cfg = _tiny(variant="D5D", environment="cartpole", seeds=[0], episodes=2, batch_size=4, warmup=8)
    report = run_experiment(cfg, tmp_path)
    df = pd.read_csv(report.metrics_paths[0])
    assert list(df.columns) == METRIC_COLUMNS
    assert int(report.summary["quantum_parameters"].iloc[0]) == 30 + 4 * 24

# ---------------- Gradient variance ----------------

def test_variance_study_needs_30_samples():
    with pytest.raises(ConfigError):
        measure_gradient_variance(VarianceStudyConfig(samples=10))


def test_single_rx_variance_is_one_half():
    table = measure_gradient_variance(VarianceStudyConfig(circuit="SingleRx", min_qubits=1, max_qubits=1,
                                                          samples=2000))
    sigma = np.sqrt(1.0 / 8.0 / 2000)
    assert table["variance"].iloc[0] == pytest.approx(0.5, abs=4 * sigma)


def test_qcnn_variance_table_shape():
    table = measure_gradient_variance(VarianceStudyConfig(circuit="QcnnAnsatz", min_qubits=3, max_qubits=4,
                                                          samples=30))
    assert list(table.columns) == ["num_qubits", "variance", "mean", "samples", "reference"]
    assert table["num_qubits"].tolist() == [3, 4]
    assert table["reference"].iloc[0] == table["variance"].iloc[0]
    assert table["reference"].iloc[1] == pytest.approx(table["variance"].iloc[0] / 2)
    assert (table["variance"] > 0).all()


def test_random_layers_circuit_layout():
    c, params = random_layers_circuit(3, 2, np.random.default_rng(0))
    assert c.num_params == 2 * 3 + 3
    np.testing.assert_allclose(params[-3:], np.pi / 4)
    assert c.gates[3].param_slot == 0


@pytest.mark.slow
def test_random_layers_variance_decreases_with_width():
    table = measure_gradient_variance(VarianceStudyConfig(circuit="RandomLayers", min_qubits=2, max_qubits=8,
                                                          samples=200))
    v = table["variance"].to_numpy()
    assert np.all(np.diff(v) < 0)

# ---------------- Gradient agreement ----------------

def test_grad_check_passes():
    report = grad_check(num_circuits=20, seed=1)
    assert report.passed, report.lines()
    assert report.circuits == 20
    assert report.max_adjoint_vs_shift < 1e-8
    assert report.max_vs_finite_difference < 1e-5


def test_grad_check_detects_corrupted_shift():
    report = grad_check(num_circuits=20, seed=1, corrupt_shift=1.1)
    assert not report.passed
    assert report.worst_slot is not None
    assert any("slot" in line for line in report.failures)


def test_grad_check_empty_circuit_passes_vacuously():
    empty = CircuitSpec(2, (), 0, (0,), frozenset({0, 1}))
    report = grad_check(cases=[(empty, np.zeros(0), 0)])
    assert report.passed
    assert report.slots_checked == 0


@pytest.mark.slow
def test_grad_check_full_suite():
    report = grad_check(num_circuits=100, seed=0)
    assert report.passed, report.lines()


def test_catch_random_baseline_is_below_chance():
    assert -1.0 < random_policy_expected_return() < 0.0
