import numpy as np
import pytest

from app.circuits import CircuitBuilder, CircuitFragment, OutputHead
from app.errors import ConfigError, ShapeError
from app.qnet import (
    CLASSICAL_BASELINE,
    VARIANT_CODES,
    ClassicalMLP,
    EncoderKind,
    EncoderSpec,
    HybridModel,
    VariantId,
    build_hybrid_model,
    build_model,
    clone_weights,
    init_hybrid_params,
    parameter_budget_errors,
)
from app.statevector import GateApplication, GateKind

CARTPOLE_OBS, CARTPOLE_ACTIONS = (4,), 2
CATCH_OBS, CATCH_ACTIONS = (8, 8, 1), 3


def _model(code="D5Q", seed=0):
    obs, actions = (CATCH_OBS, CATCH_ACTIONS) if code.startswith("C") else (CARTPOLE_OBS, CARTPOLE_ACTIONS)
    return build_hybrid_model(code, obs, actions, np.random.default_rng(seed))


def _toy_model(head=OutputHead.CLASSICAL_DENSE, seed=0):
    """2 qubits, 8 encoder angles, one 15-slot QCNN unitary."""
    kinds = (GateKind.RX, GateKind.RY, GateKind.RZ)
    gates = [GateApplication(kinds[i % 3], (i % 2,), i) for i in range(8)]
    gates.insert(4, GateApplication(GateKind.CNOT, (0, 1)))
    b = CircuitBuilder(2).add(CircuitFragment(tuple(gates), 8)).qcnn_sweep()
    circuit = b.build(num_encoder_params=8)
    spec = EncoderSpec(EncoderKind.DENSE, (3,), 8, hidden=(4,))
    rng = np.random.default_rng(seed)
    return HybridModel(spec, circuit, head, 2, init_hybrid_params(spec, circuit, head, 2, rng))


def test_variant_codes_parse_bijectively():
    assert len(VARIANT_CODES) == 12
    for code in VARIANT_CODES:
        assert VariantId.parse(code).code == code
    v = VariantId.parse("c10d")
    assert (v.encoder, v.num_qubits, v.head) == (EncoderKind.CONV, 10, OutputHead.CLASSICAL_DENSE)
    for bad in ("X5Q", "D5", "D5Z", ""):
        with pytest.raises(ConfigError):
            VariantId.parse(bad)


def test_d5q_on_cartpole_shapes():
    m = _model("D5Q")
    assert m.encoder.output_size == 72
    assert m.circuit.num_encoder_params == 72
    assert m.circuit.num_qubits == 5
    assert len(m.circuit.readout_qubits) == 2
    q = m.forward(np.array([0.01, -0.02, 0.03, 0.0]))
    assert q.shape == (2,)


def test_conv_variant_consumes_frames():
    m = _model("C5Q")
    frame = np.zeros(CATCH_OBS)
    frame[0, 4, 0] = 1.0
    frame[7, 2:5, 0] = 1.0
    assert m.forward(frame).shape == (3,)
    assert m.forward_batch(np.stack([frame, frame])).shape == (2, 3)


@pytest.mark.parametrize("code", VARIANT_CODES)
def test_parameter_budget(code):
    m = _model(code)
    assert parameter_budget_errors(m) == []


def test_zero_encoder_makes_output_independent_of_observation():
    m = _model("D5D")
    for name in m.params:
        if name.startswith("enc."):
            m.params[name][...] = 0.0
    q1 = m.forward(np.array([0.3, -1.0, 0.2, 2.0]))
    q2 = m.forward(np.array([-0.4, 0.5, -0.1, 0.0]))
    np.testing.assert_array_equal(q1, q2)


def test_forward_is_deterministic():
    m = _model("D5Q")
    obs = np.array([0.1, 0.2, -0.05, 0.3])
    np.testing.assert_array_equal(m.forward(obs), m.forward(obs))


def test_zero_upstream_gradient_gives_zero_gradients():
    m = _model("D5Q")
    grads = m.backward(np.array([0.1, 0.2, -0.05, 0.3]), [0.0, 0.0])
    assert set(grads) == set(m.params)
    for name, g in grads.items():
        assert g.shape == m.params[name].shape
        assert not np.any(g), name


@pytest.mark.parametrize("head", [OutputHead.CLASSICAL_DENSE, OutputHead.QUANTUM_POOLING])
def test_end_to_end_gradient_matches_finite_differences(head):
    m = _toy_model(head)
    rng = np.random.default_rng(7)
    obs = rng.normal(size=(2, 3))
    c = rng.normal(size=(2, 2))

    def loss():
        return float(np.sum(c * m.forward_batch(obs)))

    _, trace = m.forward_trace(obs)
    grads = m.backward_trace(trace, c)
    h = 1e-6
    for name, p in m.params.items():
        numeric = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up = loss()
            p[idx] = old - h
            down = loss()
            p[idx] = old
            numeric[idx] = (up - down) / (2 * h)
        np.testing.assert_allclose(grads[name], numeric, atol=1e-4, err_msg=name)


def test_policy_invariant_under_shared_positive_affine_head():
    m = _model("D5Q")
    obs = np.random.default_rng(3).normal(size=(6, 4)) * 0.1
    before = np.argmax(m.forward_batch(obs), axis=1)
    m.params["head.scale"] *= 3.0
    m.params["head.bias"] += 1.5
    after = np.argmax(m.forward_batch(obs), axis=1)
    np.testing.assert_array_equal(before, after)


def test_clone_is_independent():
    m = _model("D5Q")
    obs = np.random.default_rng(4).normal(size=(5, 4)) * 0.1
    clone = clone_weights(m)
    np.testing.assert_array_equal(clone.forward_batch(obs), m.forward_batch(obs))
    reference = clone.forward_batch(obs)
    m.params["quantum"] += 0.5
    m.params["enc.out.b"] += 0.1
    np.testing.assert_array_equal(clone.forward_batch(obs), reference)
    assert not np.array_equal(m.forward_batch(obs), reference)


def test_shape_errors():
    m = _model("D5Q")
    with pytest.raises(ShapeError):
        m.forward(np.zeros(5))
    _, trace = m.forward_trace(np.zeros((2, 4)))
    with pytest.raises(ShapeError):
        m.backward_trace(trace, np.zeros((2, 3)))
    toy = _toy_model()
    bad_spec = EncoderSpec(EncoderKind.DENSE, (3,), 7, hidden=(4,))
    with pytest.raises(ShapeError):
        HybridModel(bad_spec, toy.circuit, OutputHead.CLASSICAL_DENSE, 2, toy.params)


def test_single_observation_calls_reject_batches():
    m = build_model(CLASSICAL_BASELINE, CARTPOLE_OBS, CARTPOLE_ACTIONS, np.random.default_rng(0))
    with pytest.raises(ShapeError):
        m.forward(np.zeros((3, 4)))
    with pytest.raises(ShapeError):
        m.backward(np.zeros((2, 4)), [1.0, 0.0])
    np.testing.assert_allclose(m.forward(np.zeros((1, 4))), m.forward(np.zeros(4)))


def test_conv_encoder_needs_frames():
    with pytest.raises(ConfigError):
        EncoderSpec(EncoderKind.CONV, (4,), 72)


def test_classical_baseline():
    m = build_model(CLASSICAL_BASELINE, CARTPOLE_OBS, CARTPOLE_ACTIONS, np.random.default_rng(0))
    assert isinstance(m, ClassicalMLP)
    assert 5_000 <= m.parameter_count() <= 50_000
    assert m.quantum_parameter_count() == 0
    assert m.forward(np.zeros(4)).shape == (2,)
    grads = m.backward(np.ones(4), [1.0, -1.0])
    assert set(grads) == set(m.params)
