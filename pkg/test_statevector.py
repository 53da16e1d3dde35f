import numpy as np
import pytest

from app.errors import BindingError, QubitIndexError, SizeError
from app.statevector import (
    GateApplication,
    GateKind,
    StateVector,
    apply_gate,
    expectation_z,
    expectation_zz,
    gate_applications,
    gate_matrix,
    generator_matrix,
    reset_gate_counter,
    zero_state,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)


def test_zero_state_reads_plus_one_everywhere():
    s = zero_state(3)
    assert s.amplitudes[0] == 1
    assert s.norm() == pytest.approx(1.0)
    for q in range(3):
        assert expectation_z(s, q) == pytest.approx(1.0)


@pytest.mark.parametrize("n", [0, 21])
def test_zero_state_size_limits(n):
    with pytest.raises(SizeError):
        zero_state(n)


def test_little_endian_layout():
    s = apply_gate(zero_state(3), GateApplication(GateKind.RX, (1,), 0), np.pi)
    # |q2 q1 q0> = |010> -> index 2
    assert abs(s.amplitudes[2]) == pytest.approx(1.0)
    assert expectation_z(s, 1) == pytest.approx(-1.0)
    assert expectation_z(s, 0) == pytest.approx(1.0)


def test_cnot_control_first():
    s = apply_gate(zero_state(2), GateApplication(GateKind.RX, (0,), 0), np.pi)
    s = apply_gate(s, GateApplication(GateKind.CNOT, (0, 1)))
    assert abs(s.amplitudes[3]) == pytest.approx(1.0)
    s2 = apply_gate(zero_state(2), GateApplication(GateKind.CNOT, (1, 0)))
    assert abs(s2.amplitudes[0]) == pytest.approx(1.0)


def test_rx_expectation_is_cosine():
    for theta in np.linspace(-np.pi, np.pi, 9):
        s = apply_gate(zero_state(1), GateApplication(GateKind.RX, (0,), 0), theta)
        assert expectation_z(s, 0) == pytest.approx(np.cos(theta), abs=1e-12)


def test_pow_gates_at_integer_exponents():
    np.testing.assert_allclose(gate_matrix(GateKind.XPOW, 1.0), X, atol=1e-12)
    np.testing.assert_allclose(gate_matrix(GateKind.YPOW, 1.0), Y, atol=1e-12)
    np.testing.assert_allclose(gate_matrix(GateKind.ZPOW, 0.5), np.diag([1, 1j]), atol=1e-12)
    np.testing.assert_allclose(gate_matrix(GateKind.ZZPOW, 0.0), np.eye(4), atol=1e-12)
    np.testing.assert_allclose(gate_matrix(GateKind.XXPOW, 1.0), np.kron(X, X), atol=1e-12)


@pytest.mark.parametrize("kind", [k for k in GateKind if k.parameterized])
def test_gates_are_unitary_and_generators_match(kind):
    theta, h = 0.37, 1e-6
    u = gate_matrix(kind, theta)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=1e-12)
    du = (gate_matrix(kind, theta + h) - gate_matrix(kind, theta - h)) / (2 * h)
    np.testing.assert_allclose(du, -1j * generator_matrix(kind) @ u, atol=1e-7)


def _random_gates(rng, num_qubits, length):
    """(gate, value) pairs; value is None for CNOT."""
    kinds = [k for k in GateKind if k.arity <= num_qubits]
    out = []
    for _ in range(length):
        kind = kinds[rng.integers(len(kinds))]
        qubits = tuple(int(q) for q in rng.choice(num_qubits, size=kind.arity, replace=False))
        if kind.parameterized:
            out.append((GateApplication(kind, qubits, 0), float(rng.uniform(-np.pi, np.pi))))
        else:
            out.append((GateApplication(kind, qubits), None))
    return out


def _run_then_undo(gates, num_qubits):
    s = zero_state(num_qubits)
    for g, value in gates:
        s = apply_gate(s, g, value)
    forward = s
    for g, value in reversed(gates):
        s = apply_gate(s, g, None if value is None else -value)
    return forward, s


def test_norm_preserved_by_random_sequence():
    rng = np.random.default_rng(3)
    forward, _ = _run_then_undo(_random_gates(rng, 4, 60), 4)
    assert forward.norm() == pytest.approx(1.0, abs=1e-10)


def test_negated_parameters_undo_a_circuit():
    rng = np.random.default_rng(11)
    for _ in range(25):
        n = int(rng.integers(1, 6))
        _, back = _run_then_undo(_random_gates(rng, n, int(rng.integers(1, 31))), n)
        np.testing.assert_allclose(back.amplitudes, zero_state(n).amplitudes, atol=1e-10)


@pytest.mark.slow
def test_norm_and_undo_over_many_random_circuits():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        forward, back = _run_then_undo(_random_gates(rng, n, int(rng.integers(1, 51))), n)
        assert abs(forward.norm() - 1.0) <= 1e-10
        np.testing.assert_allclose(back.amplitudes, zero_state(n).amplitudes, atol=1e-9)


def test_bell_state_correlations():
    s = apply_gate(zero_state(2), GateApplication(GateKind.RY, (0,), 0), np.pi / 2)
    s = apply_gate(s, GateApplication(GateKind.CNOT, (0, 1)))
    assert expectation_z(s, 0) == pytest.approx(0.0, abs=1e-12)
    assert expectation_z(s, 1) == pytest.approx(0.0, abs=1e-12)
    assert expectation_zz(s, 0, 1) == pytest.approx(1.0, abs=1e-12)


def test_single_qubit_reference_states():
    s = apply_gate(zero_state(1), GateApplication(GateKind.RY, (0,), 0), np.pi / 5)
    np.testing.assert_allclose(s.amplitudes, [np.cos(np.pi / 10), np.sin(np.pi / 10)], atol=1e-12)
    assert expectation_z(s, 0) == pytest.approx(np.cos(np.pi / 5), abs=1e-12)
    s = apply_gate(zero_state(1), GateApplication(GateKind.RX, (0,), 0), np.pi)
    np.testing.assert_allclose(s.amplitudes, [0, -1j], atol=1e-12)


@pytest.mark.parametrize("pow_kind,rot_kind", [(GateKind.XPOW, GateKind.RX), (GateKind.YPOW, GateKind.RY)])
def test_pow_gate_matches_rotation_up_to_phase(pow_kind, rot_kind):
    for t in np.linspace(-1.5, 1.5, 7):
        a = apply_gate(zero_state(1), GateApplication(pow_kind, (0,), 0), t)
        b = apply_gate(zero_state(1), GateApplication(rot_kind, (0,), 0), np.pi * t)
        assert abs(expectation_z(a, 0)) == pytest.approx(abs(expectation_z(b, 0)), abs=1e-12)
        assert abs(np.vdot(a.amplitudes, b.amplitudes)) == pytest.approx(1.0, abs=1e-12)


def test_zero_exponent_is_identity():
    for kind in (GateKind.XPOW, GateKind.YPOW, GateKind.ZPOW, GateKind.XXPOW, GateKind.YYPOW, GateKind.ZZPOW):
        np.testing.assert_allclose(gate_matrix(kind, 0.0), np.eye(2 ** kind.arity), atol=1e-12)
    s = apply_gate(zero_state(2), GateApplication(GateKind.RY, (1,), 0), 0.7)
    t = apply_gate(s, GateApplication(GateKind.XPOW, (0,), 0), 0.0)
    np.testing.assert_allclose(t.amplitudes, s.amplitudes, atol=1e-12)


def test_apply_gate_errors():
    s = zero_state(2)
    with pytest.raises(QubitIndexError):
        apply_gate(s, GateApplication(GateKind.RX, (2,), 0), 0.1)
    with pytest.raises(BindingError):
        apply_gate(s, GateApplication(GateKind.RY, (0,), 0))
    with pytest.raises(QubitIndexError):
        GateApplication(GateKind.CNOT, (1, 1))
    with pytest.raises(BindingError):
        GateApplication(GateKind.RZ, (0,))


def test_expectation_zz():
    s = apply_gate(zero_state(2), GateApplication(GateKind.RX, (0,), 0), np.pi)
    assert expectation_zz(s, 0, 1) == pytest.approx(-1.0)
    with pytest.raises(QubitIndexError):
        expectation_zz(s, 1, 1)


def test_from_amplitudes_checks_normalization():
    ok = StateVector.from_amplitudes([1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)])
    assert ok.num_qubits == 2
    with pytest.raises(SizeError):
        StateVector.from_amplitudes([1, 1])
    with pytest.raises(SizeError):
        StateVector.from_amplitudes([1, 0, 0])


def test_state_is_read_only():
    s = zero_state(1)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0


def test_gate_counter():
    reset_gate_counter()
    s = zero_state(2)
    for q in (0, 1, 0):
        s = apply_gate(s, GateApplication(GateKind.RY, (q,), 0), 0.2)
    assert gate_applications() == 3
    reset_gate_counter()
    assert gate_applications() == 0
