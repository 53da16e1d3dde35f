# app/gradients.py
"""
Expectation values of assembled circuits and their gradients with respect to every slot.

Two exact engines:
  grad_parameter_shift  two shifted evaluations per parameterized gate application
  grad_adjoint          one forward pass + one reverse sweep over the gate list
Central finite differences are kept here as a test oracle.
"""
from __future__ import annotations

from typing import List, Mapping, Optional, Sequence

import numpy as np

from app.circuits import CircuitSpec
from app.errors import BindingError, QubitIndexError
from app.statevector import (
    StateVector,
    apply_unitary,
    gate_matrix,
    generator_matrix,
    z_signs,
    zero_state,
)

# r per gate family: Pauli rotations have generator eigenvalues ±1/2, Pow gates {0, -π}
SHIFT_CONSTANTS = {"rotation": 0.5, "pow": np.pi / 2}


def _as_params(circuit: CircuitSpec, params: Sequence[float]) -> np.ndarray:
    p = np.asarray(params, dtype=float).reshape(-1)
    if p.size != circuit.num_params:
        raise BindingError(f"Circuit has {circuit.num_params} slots, got {p.size} parameters")
    return p


def _check_readout(circuit: CircuitSpec, qubit: int) -> None:
    if not 0 <= qubit < circuit.num_qubits:
        raise QubitIndexError(f"Readout qubit {qubit} out of range for {circuit.num_qubits} qubits")


def gate_angles(circuit: CircuitSpec, params: Sequence[float]) -> List[Optional[float]]:
    """Resolved value per gate (param_scale applied); None for CNOT."""
    p = _as_params(circuit, params)
    return [None if g.param_slot is None else g.param_scale * p[g.param_slot] for g in circuit.gates]


def _run(circuit: CircuitSpec, angles: Sequence[Optional[float]]) -> np.ndarray:
    amps = zero_state(circuit.num_qubits).amplitudes
    for g, theta in zip(circuit.gates, angles):
        amps = apply_unitary(amps, circuit.num_qubits, gate_matrix(g.kind, theta), g.qubits)
    return amps


def final_amplitudes(circuit: CircuitSpec, params: Sequence[float]) -> np.ndarray:
    """Raw amplitude array after running the circuit on |0...0>."""
    return _run(circuit, gate_angles(circuit, params))


def simulate(circuit: CircuitSpec, params: Sequence[float]) -> StateVector:
    return StateVector(circuit.num_qubits, final_amplitudes(circuit, params))


def readouts_from_amplitudes(amps: np.ndarray, num_qubits: int, qubits: Sequence[int]) -> np.ndarray:
    probs = np.abs(amps) ** 2
    return np.array([float(np.dot(probs, z_signs(num_qubits, q))) for q in qubits])


def expectation_fn(circuit: CircuitSpec, params: Sequence[float], readout: int) -> float:
    """<Z_readout> after running the circuit on |0...0>."""
    _check_readout(circuit, readout)
    amps = _run(circuit, gate_angles(circuit, params))
    return float(readouts_from_amplitudes(amps, circuit.num_qubits, [readout])[0])


def expectations(circuit: CircuitSpec, params: Sequence[float],
                 readouts: Optional[Sequence[int]] = None) -> np.ndarray:
    """<Z> on each readout qubit (defaults to the circuit's readout list) from one simulation."""
    qubits = circuit.readout_qubits if readouts is None else readouts
    for q in qubits:
        _check_readout(circuit, q)
    amps = _run(circuit, gate_angles(circuit, params))
    return readouts_from_amplitudes(amps, circuit.num_qubits, qubits)


# ----------------------- Parameter shift -----------------------

def grad_parameter_shift(circuit: CircuitSpec, params: Sequence[float], readout: int,
                         shift_constants: Optional[Mapping[str, float]] = None) -> np.ndarray:
    """
    ∂f/∂θ = r·[f(θ + π/4r) − f(θ − π/4r)] per gate application; shared slots accumulate
    every application's contribution weighted by its param_scale.
    """
    _check_readout(circuit, readout)
    consts = dict(SHIFT_CONSTANTS, **(shift_constants or {}))
    angles = gate_angles(circuit, params)
    grad = np.zeros(circuit.num_params)
    for k, g in enumerate(circuit.gates):
        if g.param_slot is None:
            continue
        r = consts[g.kind.family]
        shift = np.pi / (4 * r)
        shifted = list(angles)
        shifted[k] = angles[k] + shift
        f_plus = readouts_from_amplitudes(_run(circuit, shifted), circuit.num_qubits, [readout])[0]
        shifted[k] = angles[k] - shift
        f_minus = readouts_from_amplitudes(_run(circuit, shifted), circuit.num_qubits, [readout])[0]
        grad[g.param_slot] += g.param_scale * r * (f_plus - f_minus)
    return grad


# ----------------------- Adjoint -----------------------

def vjp_adjoint(circuit: CircuitSpec, params: Sequence[float], weights: Mapping[int, float],
                final_amplitudes: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Gradient of Σ_q weights[q]·<Z_q> with respect to every slot in one reverse sweep.
    `final_amplitudes` may carry the forward state when the caller already simulated it.
    """
    for q in weights:
        _check_readout(circuit, q)
    n = circuit.num_qubits
    angles = gate_angles(circuit, params)
    phi = _run(circuit, angles) if final_amplitudes is None else np.asarray(final_amplitudes, dtype=complex)

    diag = np.zeros(2 ** n)
    for q, w in weights.items():
        diag = diag + w * z_signs(n, q)
    lam = diag * phi

    grad = np.zeros(circuit.num_params)
    for k in range(len(circuit.gates) - 1, -1, -1):
        g = circuit.gates[k]
        if g.param_slot is not None:
            mu = apply_unitary(phi, n, generator_matrix(g.kind), g.qubits)
            # dψ_k = -i·G·ψ_k  =>  2·Re<λ|dψ_k> = 2·Im<λ|G ψ_k>
            grad[g.param_slot] += g.param_scale * 2.0 * np.vdot(lam, mu).imag
        if k == 0:
            break
        u_dag = gate_matrix(g.kind, angles[k]).conj().T
        phi = apply_unitary(phi, n, u_dag, g.qubits)
        lam = apply_unitary(lam, n, u_dag, g.qubits)
    return grad


def grad_adjoint(circuit: CircuitSpec, params: Sequence[float], readout: int) -> np.ndarray:
    return vjp_adjoint(circuit, params, {readout: 1.0})


# ----------------------- Oracle -----------------------

def grad_finite_difference(circuit: CircuitSpec, params: Sequence[float], readout: int,
                           h: float = 1e-4) -> np.ndarray:
    """Central differences per slot. Test oracle only."""
    p = _as_params(circuit, params)
    grad = np.zeros(circuit.num_params)
    for j in range(circuit.num_params):
        up, down = p.copy(), p.copy()
        up[j] += h
        down[j] -= h
        grad[j] = (expectation_fn(circuit, up, readout) - expectation_fn(circuit, down, readout)) / (2 * h)
    return grad
