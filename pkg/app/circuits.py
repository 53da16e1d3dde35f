# app/circuits.py
"""
Circuit blocks for the hybrid model and their assembly into one flat-parameter circuit.

Parameter layout of an assembled circuit:
  [0, num_encoder_params)            angles produced by the classical encoder
  [num_encoder_params, num_params)   trainable quantum parameters
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from app.errors import BindingError, CircuitStateError, ConfigError, QubitIndexError, SizeError
from app.statevector import MAX_QUBITS, GateApplication, GateKind

LAYER_ROTATIONS = (GateKind.RX, GateKind.RY, GateKind.RZ)
POW_ROTATIONS = (GateKind.XPOW, GateKind.YPOW, GateKind.ZPOW)
QCNN_PARAMS = 15
POOL_PARAMS = 6


class OutputHead(str, Enum):
    QUANTUM_POOLING = "Q"
    CLASSICAL_DENSE = "D"


# ----------------------- Types -----------------------

@dataclass(frozen=True)
class CircuitFragment:
    gates: Tuple[GateApplication, ...]
    num_params: int                      # fresh slots introduced by this fragment
    retired: FrozenSet[int] = frozenset()  # qubits pooled out by this fragment


@dataclass(frozen=True)
class CircuitSpec:
    num_qubits: int
    gates: Tuple[GateApplication, ...]
    num_params: int
    readout_qubits: Tuple[int, ...]
    active_qubits: FrozenSet[int]
    num_encoder_params: int = 0
    # (index of the first gate after the pool, retired source qubit)
    pooled: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise SizeError(f"num_qubits must be in [1, {MAX_QUBITS}], got {self.num_qubits}")
        referenced = set()
        for g in self.gates:
            for q in g.qubits:
                if q >= self.num_qubits:
                    raise QubitIndexError(f"{g.kind.value} touches qubit {q} of a {self.num_qubits}-qubit circuit")
            if g.param_slot is not None:
                if not 0 <= g.param_slot < self.num_params:
                    raise BindingError(f"Slot {g.param_slot} outside [0, {self.num_params})")
                referenced.add(g.param_slot)
        if len(referenced) != self.num_params:
            missing = sorted(set(range(self.num_params)) - referenced)
            raise BindingError(f"Slots never referenced by a gate: {missing[:10]}")
        if not set(self.readout_qubits) <= set(self.active_qubits):
            raise CircuitStateError(f"Readout {self.readout_qubits} includes pooled-out qubits")
        if not 0 <= self.num_encoder_params <= self.num_params:
            raise BindingError("num_encoder_params exceeds num_params")

    @property
    def num_trainable_params(self) -> int:
        return self.num_params - self.num_encoder_params

    def slot_families(self) -> List[str]:
        """Gate family ('rotation' / 'pow') that owns each slot, by first reference."""
        fam: List[Optional[str]] = [None] * self.num_params
        for g in self.gates:
            if g.param_slot is not None and fam[g.param_slot] is None:
                fam[g.param_slot] = g.kind.family
        return [f or "rotation" for f in fam]


@dataclass(frozen=True)
class ArchitectureConfig:
    num_qubits: int = 5
    num_encoder_layers: int = 3
    num_qcnn_blocks: int = 2
    num_body_layers: int = 4
    output_head: OutputHead = OutputHead.QUANTUM_POOLING

    def __post_init__(self):
        object.__setattr__(self, "output_head", OutputHead(self.output_head))
        for name in ("num_encoder_layers", "num_qcnn_blocks", "num_body_layers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 3 <= self.num_qubits <= MAX_QUBITS:
            raise ConfigError(f"num_qubits must be in [3, {MAX_QUBITS}], got {self.num_qubits}")

    @classmethod
    def original(cls, num_qubits: int = 5, output_head: OutputHead = OutputHead.QUANTUM_POOLING) -> "ArchitectureConfig":
        """The first proposal: one QCNN/pooling block followed by 3 body layers."""
        return cls(num_qubits=num_qubits, num_qcnn_blocks=1, num_body_layers=3, output_head=output_head)

    @property
    def encoder_output_size(self) -> int:
        return self.num_encoder_layers * layer_param_count(self.num_qubits)


def layer_param_count(num_qubits: int) -> int:
    return 6 * num_qubits - 6


# ----------------------- Blocks -----------------------

def build_layer(num_qubits: int, param_offset: int, qubits: Optional[Sequence[int]] = None) -> CircuitFragment:
    """
    One parameterized layer: Rx,Ry,Rz on every qubit, boundary CNOTs (q0->q1, q[m-2]->q[m-1]),
    Rx,Ry,Rz on the inner qubits, then the inner CNOT cascade q1->q2->...->q[m-2].
    `qubits` maps layer wires onto circuit qubits (defaults to 0..num_qubits-1).
    """
    wires = list(range(num_qubits)) if qubits is None else list(qubits)
    m = len(wires)
    if m < 3:
        raise SizeError(f"A layer needs >= 3 qubits (inner set would be empty), got {m}")

    gates: List[GateApplication] = []
    slot = param_offset
    for q in wires:
        for kind in LAYER_ROTATIONS:
            gates.append(GateApplication(kind, (q,), slot))
            slot += 1
    gates.append(GateApplication(GateKind.CNOT, (wires[0], wires[1])))
    gates.append(GateApplication(GateKind.CNOT, (wires[m - 2], wires[m - 1])))
    for q in wires[1:-1]:
        for kind in LAYER_ROTATIONS:
            gates.append(GateApplication(kind, (q,), slot))
            slot += 1
    for a, b in zip(wires[1:m - 2], wires[2:m - 1]):
        gates.append(GateApplication(GateKind.CNOT, (a, b)))
    return CircuitFragment(tuple(gates), slot - param_offset)


def build_qcnn_unitary(qubit_a: int, qubit_b: int, param_offset: int) -> CircuitFragment:
    """Two-qubit entangling unitary with 15 distinct slots."""
    if qubit_a == qubit_b:
        raise QubitIndexError(f"QCNN unitary needs two distinct qubits, got {qubit_a} twice")
    gates: List[GateApplication] = []
    slot = param_offset
    for q in (qubit_a, qubit_b):
        for kind in POW_ROTATIONS:
            gates.append(GateApplication(kind, (q,), slot))
            slot += 1
    for kind in (GateKind.ZZPOW, GateKind.YYPOW, GateKind.XXPOW):
        gates.append(GateApplication(kind, (qubit_a, qubit_b), slot))
        slot += 1
    for q in (qubit_a, qubit_b):
        for kind in POW_ROTATIONS:
            gates.append(GateApplication(kind, (q,), slot))
            slot += 1
    return CircuitFragment(tuple(gates), QCNN_PARAMS)


def build_qcnn_sweep(qubits: Sequence[int], param_offset: int) -> CircuitFragment:
    """One QCNN unitary per adjacent pair (q0,q1), (q1,q2), ..., all sharing the same 15 slots."""
    wires = list(qubits)
    if len(wires) < 2:
        raise SizeError("A QCNN sweep needs at least 2 active qubits")
    gates: List[GateApplication] = []
    for a, b in zip(wires[:-1], wires[1:]):
        gates.extend(build_qcnn_unitary(a, b, param_offset).gates)
    return CircuitFragment(tuple(gates), QCNN_PARAMS)


def build_pooling(source: int, sink: int, param_offset: int,
                  active: Optional[Sequence[int]] = None) -> CircuitFragment:
    """Retire `source` into `sink`. The closing sink rotations reuse slots θ2, θ1, θ0 negated."""
    if source == sink:
        raise QubitIndexError(f"Pooling needs distinct source and sink, got {source} twice")
    if active is not None:
        for q in (source, sink):
            if q not in active:
                raise CircuitStateError(f"Qubit {q} was already pooled out")
    t = [param_offset + i for i in range(POOL_PARAMS)]
    gates = (
        GateApplication(GateKind.XPOW, (sink,), t[0]),
        GateApplication(GateKind.YPOW, (sink,), t[1]),
        GateApplication(GateKind.ZPOW, (sink,), t[2]),
        GateApplication(GateKind.XPOW, (source,), t[3]),
        GateApplication(GateKind.YPOW, (source,), t[4]),
        GateApplication(GateKind.ZPOW, (source,), t[5]),
        GateApplication(GateKind.CNOT, (source, sink)),
        GateApplication(GateKind.ZPOW, (sink,), t[2], -1.0),
        GateApplication(GateKind.YPOW, (sink,), t[1], -1.0),
        GateApplication(GateKind.XPOW, (sink,), t[0], -1.0),
    )
    return CircuitFragment(gates, POOL_PARAMS, frozenset({source}))


def pooling_schedule(active: Sequence[int], floor: int) -> List[Tuple[int, int]]:
    """
    One pooling round: (active[0] -> active[1]), (active[2] -> active[3]), ...
    An odd trailing qubit passes through; the round stops once `floor` qubits remain.
    """
    wires = list(active)
    remaining = len(wires)
    pairs: List[Tuple[int, int]] = []
    for i in range(0, len(wires) - 1, 2):
        if remaining <= floor:
            break
        pairs.append((wires[i], wires[i + 1]))
        remaining -= 1
    return pairs


# ----------------------- Assembly -----------------------

class CircuitBuilder:
    """Accumulates fragments while tracking fresh slots and the active register."""

    def __init__(self, num_qubits: int):
        self.num_qubits = num_qubits
        self.num_params = 0
        self.active: List[int] = list(range(num_qubits))
        self._gates: List[GateApplication] = []
        self._pooled: List[Tuple[int, int]] = []

    def add(self, fragment: CircuitFragment) -> "CircuitBuilder":
        for g in fragment.gates:
            for q in g.qubits:
                if q not in self.active:
                    raise CircuitStateError(f"{g.kind.value} touches pooled-out qubit {q}")
        self._gates.extend(fragment.gates)
        self.num_params += fragment.num_params
        for q in sorted(fragment.retired):
            self.active.remove(q)
            self._pooled.append((len(self._gates), q))
        return self

    def layer(self) -> "CircuitBuilder":
        return self.add(build_layer(len(self.active), self.num_params, qubits=self.active))

    def qcnn_sweep(self) -> "CircuitBuilder":
        return self.add(build_qcnn_sweep(self.active, self.num_params))

    def pooling_round(self, floor: int) -> int:
        pairs = pooling_schedule(self.active, floor)
        for source, sink in pairs:
            self.add(build_pooling(source, sink, self.num_params, active=self.active))
        return len(pairs)

    def build(self, readout: Optional[Sequence[int]] = None, num_encoder_params: int = 0) -> CircuitSpec:
        return CircuitSpec(
            num_qubits=self.num_qubits,
            gates=tuple(self._gates),
            num_params=self.num_params,
            readout_qubits=tuple(self.active if readout is None else readout),
            active_qubits=frozenset(self.active),
            num_encoder_params=num_encoder_params,
            pooled=tuple(self._pooled),
        )


def assemble_model_circuit(config: ArchitectureConfig, action_count: int) -> CircuitSpec:
    """
    Encoder layers -> QCNN blocks (each with a pooling round for the quantum head) ->
    body layers -> final pooling down to `action_count` qubits for the quantum head.
    Block pooling keeps at least max(3, action_count) qubits so body layers keep an inner set.
    """
    if action_count < 2:
        raise ConfigError(f"action_count must be >= 2, got {action_count}")
    pooling = config.output_head is OutputHead.QUANTUM_POOLING
    if pooling and action_count > config.num_qubits:
        raise ConfigError(
            f"Quantum pooling head cannot serve {action_count} actions with {config.num_qubits} qubits"
        )

    b = CircuitBuilder(config.num_qubits)
    for _ in range(config.num_encoder_layers):
        b.layer()
    num_encoder = b.num_params

    floor = max(3, action_count)
    for _ in range(config.num_qcnn_blocks):
        b.qcnn_sweep()
        if pooling:
            b.pooling_round(floor)

    for _ in range(config.num_body_layers):
        b.layer()

    if pooling:
        while len(b.active) > action_count:
            b.pooling_round(action_count)
    return b.build(num_encoder_params=num_encoder)


# ----------------------- Parameters -----------------------

def init_quantum_params(circuit: CircuitSpec, rng: np.random.Generator) -> np.ndarray:
    """Uniform [0, 2π) for rotation slots and [0, 2) for Pow exponents (trainable slots only)."""
    fams = circuit.slot_families()[circuit.num_encoder_params:]
    out = np.empty(len(fams))
    for i, fam in enumerate(fams):
        out[i] = rng.uniform(0.0, 2 * np.pi) if fam == "rotation" else rng.uniform(0.0, 2.0)
    return out


def random_circuit(rng: np.random.Generator, num_qubits: int, num_slots: int, num_gates: int,
                   negate_prob: float = 0.3) -> CircuitSpec:
    """
    Random circuit over the full gate set. Every slot is referenced; later gates reuse
    slots at random (shared), with probability `negate_prob` at scale -1.
    """
    kinds = [k for k in GateKind if k.arity <= num_qubits]
    if num_slots == 0:
        kinds = [k for k in kinds if not k.parameterized]
    gates: List[GateApplication] = []
    next_slot = 0

    def _slot_and_scale():
        nonlocal next_slot
        if next_slot < num_slots:
            slot = next_slot
            next_slot += 1
        else:
            slot = int(rng.integers(num_slots))
        return slot, (-1.0 if rng.random() < negate_prob else 1.0)

    for _ in range(num_gates if kinds else 0):
        kind = kinds[int(rng.integers(len(kinds)))]
        qubits = tuple(int(q) for q in rng.choice(num_qubits, size=kind.arity, replace=False))
        if kind.parameterized:
            slot, scale = _slot_and_scale()
            gates.append(GateApplication(kind, qubits, slot, scale))
        else:
            gates.append(GateApplication(kind, qubits))
    while next_slot < num_slots:
        q = int(rng.integers(num_qubits))
        gates.append(GateApplication(GateKind.RY, (q,), next_slot))
        next_slot += 1

    return CircuitSpec(
        num_qubits=num_qubits,
        gates=tuple(gates),
        num_params=num_slots,
        readout_qubits=tuple(range(num_qubits)),
        active_qubits=frozenset(range(num_qubits)),
    )


# ----------------------- Pretty printer -----------------------

def format_gate(g: GateApplication) -> str:
    qubits = ",".join(str(q) for q in g.qubits)
    if g.param_slot is None:
        return f"{g.kind.value} {qubits} - -"
    return f"{g.kind.value} {qubits} {g.param_slot} {g.param_scale:+g}"


def format_circuit(circuit: CircuitSpec) -> str:
    """Plain-text listing, one gate per line: kind, qubits, slot, scale."""
    head = (
        f"# qubits={circuit.num_qubits} params={circuit.num_params} "
        f"encoder={circuit.num_encoder_params} trainable={circuit.num_trainable_params} "
        f"readout={','.join(str(q) for q in circuit.readout_qubits)}"
    )
    return "\n".join([head] + [format_gate(g) for g in circuit.gates]) + "\n"
