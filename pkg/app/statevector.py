# app/statevector.py
"""
Dense statevector simulation for the gate set used by the model circuits.

Qubit 0 is the least-significant bit of the basis-state index (little-endian):
basis index i has qubit q set iff (i >> q) & 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np

from app.errors import BindingError, QubitIndexError, SizeError

MAX_QUBITS = 20
NORM_TOL = 1e-10

# ----------------------- Gate set -----------------------

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# two-qubit basis index = 2*bit(first qubit) + bit(second qubit)
_CNOT = np.array(
    [[1, 0, 0, 0],
     [0, 1, 0, 0],
     [0, 0, 0, 1],
     [0, 0, 1, 0]],
    dtype=complex,
)


class GateKind(str, Enum):
    RX = "Rx"
    RY = "Ry"
    RZ = "Rz"
    XPOW = "XPow"
    YPOW = "YPow"
    ZPOW = "ZPow"
    XXPOW = "XXPow"
    YYPOW = "YYPow"
    ZZPOW = "ZZPow"
    CNOT = "CNOT"

    @property
    def arity(self) -> int:
        return 2 if self in _TWO_QUBIT else 1

    @property
    def parameterized(self) -> bool:
        return self is not GateKind.CNOT

    @property
    def family(self) -> Optional[str]:
        """'rotation' (angle in radians), 'pow' (exponent) or None for CNOT."""
        if self in (GateKind.RX, GateKind.RY, GateKind.RZ):
            return "rotation"
        if self is GateKind.CNOT:
            return None
        return "pow"


_TWO_QUBIT = {GateKind.XXPOW, GateKind.YYPOW, GateKind.ZZPOW, GateKind.CNOT}

_PAULI = {
    GateKind.RX: _X, GateKind.RY: _Y, GateKind.RZ: _Z,
    GateKind.XPOW: _X, GateKind.YPOW: _Y, GateKind.ZPOW: _Z,
    GateKind.XXPOW: np.kron(_X, _X),
    GateKind.YYPOW: np.kron(_Y, _Y),
    GateKind.ZZPOW: np.kron(_Z, _Z),
}


@dataclass(frozen=True)
class GateApplication:
    kind: GateKind
    qubits: Tuple[int, ...]
    param_slot: Optional[int] = None
    param_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != self.kind.arity:
            raise QubitIndexError(f"{self.kind.value} acts on {self.kind.arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise QubitIndexError(f"{self.kind.value} needs distinct qubits, got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise QubitIndexError(f"Negative qubit index in {self.qubits}")
        if self.kind.parameterized and self.param_slot is None:
            raise BindingError(f"{self.kind.value} requires a parameter slot")
        if not self.kind.parameterized and self.param_slot is not None:
            raise BindingError(f"{self.kind.value} takes no parameter (got slot {self.param_slot})")


def gate_matrix(kind: GateKind, theta: Optional[float] = None) -> np.ndarray:
    """
    Unitary for one gate.
      Rotations: R(θ) = exp(-iθ/2·P).
      Pow gates: eigenvalue 1 on the +1 eigenspace of P and e^{iπt} on the -1 eigenspace.
    """
    if kind is GateKind.CNOT:
        return _CNOT
    if theta is None:
        raise BindingError(f"{kind.value} needs a parameter value")
    p = _PAULI[kind]
    eye = np.eye(p.shape[0], dtype=complex)
    if kind.family == "rotation":
        return np.cos(theta / 2) * eye - 1j * np.sin(theta / 2) * p
    return (eye + p) / 2 + np.exp(1j * np.pi * theta) * (eye - p) / 2


def generator_matrix(kind: GateKind) -> np.ndarray:
    """G such that dU/dθ = -i·G·U(θ)."""
    if not kind.parameterized:
        raise BindingError(f"{kind.value} has no generator")
    p = _PAULI[kind]
    if kind.family == "rotation":
        return p / 2
    return -(np.pi / 2) * (np.eye(p.shape[0], dtype=complex) - p)


# ----------------------- Kernel -----------------------

@dataclass
class _GateCounter:
    value: int = 0


_COUNTER = _GateCounter()


def gate_applications() -> int:
    """Number of statevector kernel calls since the last reset."""
    return _COUNTER.value


def reset_gate_counter() -> None:
    _COUNTER.value = 0


def apply_unitary(amps: np.ndarray, num_qubits: int, matrix: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """
    Contract a 2^k x 2^k operator into the given qubits of a flat amplitude array.
    Returns a new array; `amps` is left untouched. The matrix need not be unitary
    (generators go through here too).
    """
    _COUNTER.value += 1
    k = len(qubits)
    psi = amps.reshape((2,) * num_qubits)
    axes = [num_qubits - 1 - q for q in qubits]
    op = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return np.ascontiguousarray(out).reshape(-1)


@lru_cache(maxsize=512)
def z_signs(num_qubits: int, qubit: int) -> np.ndarray:
    """+1 where the qubit's bit is 0, -1 where it is 1 (diagonal of Z_qubit)."""
    idx = np.arange(2 ** num_qubits)
    signs = 1.0 - 2.0 * ((idx >> qubit) & 1)
    signs.flags.writeable = False
    return signs


# ----------------------- StateVector -----------------------

@dataclass(frozen=True)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2 ** self.num_qubits:
            raise SizeError(f"{amps.size} amplitudes cannot describe {self.num_qubits} qubits")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes: Sequence[complex]) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.size))) if amps.size else 0
        if n < 1 or 2 ** n != amps.size:
            raise SizeError(f"Amplitude count {amps.size} is not a power of two >= 2")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise SizeError(f"State is not normalized (norm^2={norm:.12f})")
        return cls(n, amps)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def zero_state(num_qubits: int) -> StateVector:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise SizeError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}")
    amps = np.zeros(2 ** num_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def _check_qubits(num_qubits: int, qubits: Sequence[int]) -> None:
    for q in qubits:
        if not 0 <= q < num_qubits:
            raise QubitIndexError(f"Qubit {q} out of range for {num_qubits}-qubit state")


def apply_gate(state: StateVector, gate: GateApplication, theta: Optional[float] = None) -> StateVector:
    """
    Apply one gate. `theta` is the resolved value (param_scale already applied);
    it is ignored for CNOT.
    """
    _check_qubits(state.num_qubits, gate.qubits)
    if gate.kind.parameterized and theta is None:
        raise BindingError(f"{gate.kind.value} on {gate.qubits} applied without a parameter value")
    m = gate_matrix(gate.kind, theta)
    amps = apply_unitary(state.amplitudes, state.num_qubits, m, gate.qubits)
    return StateVector(state.num_qubits, amps)


# ----------------------- Readout -----------------------

def expectation_z(state: StateVector, qubit: int) -> float:
    """<Z_qubit> = P(bit=0) - P(bit=1)."""
    _check_qubits(state.num_qubits, [qubit])
    return float(np.dot(state.probabilities(), z_signs(state.num_qubits, qubit)))


def expectation_zz(state: StateVector, qubit_a: int, qubit_b: int) -> float:
    if qubit_a == qubit_b:
        raise QubitIndexError(f"ZZ readout needs two distinct qubits, got {qubit_a} twice")
    _check_qubits(state.num_qubits, [qubit_a, qubit_b])
    signs = z_signs(state.num_qubits, qubit_a) * z_signs(state.num_qubits, qubit_b)
    return float(np.dot(state.probabilities(), signs))
