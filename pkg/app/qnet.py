# app/qnet.py
"""
Function approximators for DDQN:
  HybridModel   classical encoder -> encoding circuit -> QCNN/body circuit -> output head
  ClassicalMLP  small all-classical baseline with the same interface
"""
from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.circuits import (
    ArchitectureConfig,
    CircuitSpec,
    OutputHead,
    assemble_model_circuit,
    init_quantum_params,
)
from app.errors import ConfigError, ShapeError
from app.gradients import final_amplitudes, readouts_from_amplitudes, vjp_adjoint
from app.layers import (
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    glorot_uniform,
    he_uniform,
    relu,
    relu_backward,
    tanh_pi,
    tanh_pi_backward,
)

Params = Dict[str, np.ndarray]

PARAM_BUDGET = (5_000, 50_000)
QUANTUM_BUDGET = (30, 999)


class EncoderKind(str, Enum):
    DENSE = "D"
    CONV = "C"


# ----------------------- Variants -----------------------

_VARIANT_RE = re.compile(r"^([DC])(\d+)([DQ])$")


@dataclass(frozen=True)
class VariantId:
    encoder: EncoderKind
    num_qubits: int
    head: OutputHead

    @classmethod
    def parse(cls, code: str) -> "VariantId":
        m = _VARIANT_RE.match((code or "").strip().upper())
        if not m:
            raise ConfigError(f"Unknown variant '{code}' (expected e.g. D5Q, C10D)")
        return cls(EncoderKind(m.group(1)), int(m.group(2)), OutputHead(m.group(3)))

    @property
    def code(self) -> str:
        return f"{self.encoder.value}{self.num_qubits}{self.head.value}"

    def __str__(self) -> str:
        return self.code


VARIANT_CODES: Tuple[str, ...] = tuple(
    f"{enc}{n}{head}" for enc in "DC" for n in (5, 10, 15) for head in "DQ"
)
CLASSICAL_BASELINE = "ClassicalMLP"


# ----------------------- Encoder -----------------------

@dataclass(frozen=True)
class EncoderSpec:
    kind: EncoderKind
    input_shape: Tuple[int, ...]
    output_size: int
    hidden: Tuple[int, ...] = (64, 64)
    conv_filters: Tuple[int, ...] = (8, 16)
    kernel_size: int = 3
    stride: int = 2
    padding: int = 1

    def __post_init__(self):
        if self.kind is EncoderKind.CONV and len(self.input_shape) != 3:
            raise ConfigError(f"Convolutional encoder needs (height, width, channels) input, got {self.input_shape}")

    def conv_shapes(self) -> List[Tuple[int, int, int]]:
        """Spatial output (h, w, c) after each convolution."""
        h, w, c = self.input_shape
        out = []
        for f in self.conv_filters:
            h = (h + 2 * self.padding - self.kernel_size) // self.stride + 1
            w = (w + 2 * self.padding - self.kernel_size) // self.stride + 1
            c = f
            if h < 1 or w < 1:
                raise ConfigError(f"Convolution stack collapses input {self.input_shape} to nothing")
            out.append((h, w, c))
        return out

    def dense_names(self) -> List[str]:
        return [f"enc.dense{i}" for i in range(len(self.hidden))] + ["enc.out"]

    def param_shapes(self) -> Dict[str, Tuple[int, ...]]:
        shapes: Dict[str, Tuple[int, ...]] = {}
        if self.kind is EncoderKind.CONV:
            c_in = self.input_shape[2]
            for i, f in enumerate(self.conv_filters):
                shapes[f"enc.conv{i}.w"] = (self.kernel_size, self.kernel_size, c_in, f)
                shapes[f"enc.conv{i}.b"] = (f,)
                c_in = f
            h, w, c = self.conv_shapes()[-1]
            fan_in = h * w * c
        else:
            fan_in = int(np.prod(self.input_shape))
        for name, width in zip(self.dense_names(), list(self.hidden) + [self.output_size]):
            shapes[f"{name}.w"] = (fan_in, width)
            shapes[f"{name}.b"] = (width,)
            fan_in = width
        return shapes


def _dense_stack_forward(params: Params, names: Sequence[str], x: np.ndarray,
                         final: Callable[[np.ndarray], np.ndarray]):
    cache = []
    h = x
    for i, name in enumerate(names):
        z = dense_forward(h, params[f"{name}.w"], params[f"{name}.b"])
        cache.append((h, z))
        h = final(z) if i == len(names) - 1 else relu(z)
    return h, cache


def _dense_stack_backward(params: Params, names: Sequence[str], cache, grad_out: np.ndarray,
                          final_backward: Callable[[np.ndarray, np.ndarray], np.ndarray],
                          grads: Params) -> np.ndarray:
    g = grad_out
    for i in range(len(names) - 1, -1, -1):
        name = names[i]
        h, z = cache[i]
        g = final_backward(z, g) if i == len(names) - 1 else relu_backward(z, g)
        g, grads[f"{name}.w"], grads[f"{name}.b"] = dense_backward(h, params[f"{name}.w"], g)
    return g


def _identity_backward(_: np.ndarray, g: np.ndarray) -> np.ndarray:
    return g


def encoder_forward(spec: EncoderSpec, params: Params, x: np.ndarray):
    """Batch of observations -> (batch, output_size) angles in (-π, π), plus a cache for backward."""
    conv_cache = []
    h = x
    if spec.kind is EncoderKind.CONV:
        for i in range(len(spec.conv_filters)):
            z = conv2d_forward(h, params[f"enc.conv{i}.w"], params[f"enc.conv{i}.b"], spec.stride, spec.padding)
            conv_cache.append((h, z))
            h = relu(z)
    flat_shape = h.shape
    h = h.reshape(h.shape[0], -1)
    angles, dense_cache = _dense_stack_forward(params, spec.dense_names(), h, tanh_pi)
    return angles, (conv_cache, flat_shape, dense_cache)


def encoder_backward(spec: EncoderSpec, params: Params, cache, grad_angles: np.ndarray) -> Params:
    conv_cache, flat_shape, dense_cache = cache
    grads: Params = {}
    g = _dense_stack_backward(params, spec.dense_names(), dense_cache, grad_angles, tanh_pi_backward, grads)
    g = g.reshape(flat_shape)
    for i in range(len(conv_cache) - 1, -1, -1):
        h, z = conv_cache[i]
        g = relu_backward(z, g)
        g, grads[f"enc.conv{i}.w"], grads[f"enc.conv{i}.b"] = conv2d_backward(
            h, params[f"enc.conv{i}.w"], g, spec.stride, spec.padding
        )
    return grads


def _init_encoder(spec: EncoderSpec, rng: np.random.Generator) -> Params:
    params: Params = {}
    for name, shape in spec.param_shapes().items():
        if name.endswith(".b"):
            params[name] = np.zeros(shape)
        elif name.startswith("enc.conv"):
            params[name] = he_uniform(rng, shape, fan_in=shape[0] * shape[1] * shape[2])
        elif name.startswith("enc.out"):
            params[name] = glorot_uniform(rng, shape, shape[0], shape[1])
        else:
            params[name] = he_uniform(rng, shape, fan_in=shape[0])
    return params


# ----------------------- Shared interface -----------------------

@dataclass
class _Trace:
    observations: np.ndarray
    cache: object
    angles: Optional[np.ndarray] = None
    amplitudes: List[np.ndarray] = field(default_factory=list)
    readouts: Optional[np.ndarray] = None


class QFunction:
    """Common surface used by the agent: batched forward, traced backward, params dict."""

    params: Params
    action_count: int
    observation_shape: Tuple[int, ...]

    def _batch(self, observations) -> np.ndarray:
        x = np.asarray(observations, dtype=float)
        if x.shape == tuple(self.observation_shape):
            return x[None, ...]
        if x.shape[1:] != tuple(self.observation_shape):
            raise ShapeError(f"Observation shape {x.shape} does not match {self.observation_shape}")
        return x

    def _single(self, observation) -> np.ndarray:
        x = self._batch(observation)
        if x.shape[0] != 1:
            raise ShapeError(f"Expected one observation of shape {self.observation_shape}, got a batch of {x.shape[0]}")
        return x

    def forward_trace(self, observations) -> Tuple[np.ndarray, _Trace]:
        raise NotImplementedError

    def backward_trace(self, trace: _Trace, grad_q: np.ndarray) -> Params:
        raise NotImplementedError

    def forward_batch(self, observations) -> np.ndarray:
        q, _ = self.forward_trace(observations)
        return q

    def forward(self, observation) -> np.ndarray:
        """Q-values for one observation."""
        return self.forward_batch(self._single(observation))[0]

    def backward(self, observation, grad_q: Sequence[float]) -> Params:
        """Gradients of Σ_a grad_q[a]·Q(observation, a) for every parameter group."""
        x = self._single(observation)
        _, trace = self.forward_trace(x)
        return self.backward_trace(trace, np.asarray(grad_q, dtype=float).reshape(1, -1))

    def _check_grad_q(self, trace: _Trace, grad_q: np.ndarray) -> np.ndarray:
        g = np.asarray(grad_q, dtype=float)
        if g.shape != (trace.observations.shape[0], self.action_count):
            raise ShapeError(f"dL/dq shape {g.shape} != ({trace.observations.shape[0]}, {self.action_count})")
        return g

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def quantum_parameter_count(self) -> int:
        q = self.params.get("quantum")
        return 0 if q is None else int(q.size)

    def clone(self) -> "QFunction":
        return copy.deepcopy(self)


def clone_weights(src: QFunction) -> QFunction:
    """Independent deep copy; later updates to `src` leave the clone unchanged."""
    return src.clone()


# ----------------------- Hybrid model -----------------------

class HybridModel(QFunction):
    def __init__(self, encoder: EncoderSpec, circuit: CircuitSpec, head: OutputHead,
                 action_count: int, params: Params, variant: Optional[VariantId] = None):
        if encoder.output_size != circuit.num_encoder_params:
            raise ShapeError(
                f"Encoder emits {encoder.output_size} angles, circuit expects {circuit.num_encoder_params}"
            )
        n_read = len(circuit.readout_qubits)
        if head is OutputHead.QUANTUM_POOLING and n_read != action_count:
            raise ShapeError(f"Quantum head reads {n_read} qubits for {action_count} actions")
        self.encoder = encoder
        self.circuit = circuit
        self.head = OutputHead(head)
        self.action_count = action_count
        self.observation_shape = tuple(encoder.input_shape)
        self.variant = variant
        self.params = params
        expected = dict(encoder.param_shapes())
        expected["quantum"] = (circuit.num_trainable_params,)
        expected.update(self._head_shapes())
        for name, shape in expected.items():
            if name not in params or params[name].shape != shape:
                got = None if name not in params else params[name].shape
                raise ShapeError(f"Parameter '{name}' should have shape {shape}, got {got}")

    def _head_shapes(self) -> Dict[str, Tuple[int, ...]]:
        if self.head is OutputHead.QUANTUM_POOLING:
            return {"head.scale": (self.action_count,), "head.bias": (self.action_count,)}
        return {"head.w": (len(self.circuit.readout_qubits), self.action_count), "head.b": (self.action_count,)}

    # -- forward --

    def _head_forward(self, readouts: np.ndarray) -> np.ndarray:
        if self.head is OutputHead.QUANTUM_POOLING:
            return readouts * self.params["head.scale"] + self.params["head.bias"]
        return dense_forward(readouts, self.params["head.w"], self.params["head.b"])

    def forward_trace(self, observations) -> Tuple[np.ndarray, _Trace]:
        x = self._batch(observations)
        angles, cache = encoder_forward(self.encoder, self.params, x)
        quantum = self.params["quantum"]
        n = self.circuit.num_qubits
        amps: List[np.ndarray] = []
        readouts = np.zeros((x.shape[0], len(self.circuit.readout_qubits)))
        for i in range(x.shape[0]):
            psi = final_amplitudes(self.circuit, np.concatenate([angles[i], quantum]))
            amps.append(psi)
            readouts[i] = readouts_from_amplitudes(psi, n, self.circuit.readout_qubits)
        q = self._head_forward(readouts)
        return q, _Trace(x, cache, angles, amps, readouts)

    # -- backward --

    def backward_trace(self, trace: _Trace, grad_q: np.ndarray) -> Params:
        g = self._check_grad_q(trace, grad_q)
        grads: Params = {}
        if self.head is OutputHead.QUANTUM_POOLING:
            grads["head.scale"] = (g * trace.readouts).sum(axis=0)
            grads["head.bias"] = g.sum(axis=0)
            grad_readouts = g * self.params["head.scale"]
        else:
            grad_readouts, grads["head.w"], grads["head.b"] = dense_backward(trace.readouts, self.params["head.w"], g)

        n_enc = self.circuit.num_encoder_params
        quantum = self.params["quantum"]
        grad_angles = np.zeros_like(trace.angles)
        grad_quantum = np.zeros_like(quantum)
        for i in range(g.shape[0]):
            weights = {
                q: float(w) for q, w in zip(self.circuit.readout_qubits, grad_readouts[i]) if w != 0.0
            }
            if not weights:
                continue
            full = np.concatenate([trace.angles[i], quantum])
            slot_grad = vjp_adjoint(self.circuit, full, weights, final_amplitudes=trace.amplitudes[i])
            grad_angles[i] = slot_grad[:n_enc]
            grad_quantum += slot_grad[n_enc:]
        grads["quantum"] = grad_quantum
        grads.update(encoder_backward(self.encoder, self.params, trace.cache, grad_angles))
        return grads


def build_hybrid_model(variant: VariantId | str, observation_shape: Sequence[int], action_count: int,
                       rng: np.random.Generator, num_encoder_layers: int = 3, num_qcnn_blocks: int = 2,
                       num_body_layers: int = 4, dense_hidden: Sequence[int] = (64, 64),
                       conv_filters: Sequence[int] = (8, 16)) -> HybridModel:
    v = VariantId.parse(variant) if isinstance(variant, str) else variant
    arch = ArchitectureConfig(
        num_qubits=v.num_qubits,
        num_encoder_layers=num_encoder_layers,
        num_qcnn_blocks=num_qcnn_blocks,
        num_body_layers=num_body_layers,
        output_head=v.head,
    )
    circuit = assemble_model_circuit(arch, action_count)
    if v.encoder is EncoderKind.CONV:
        # conv stack feeds one dense hidden layer
        spec = EncoderSpec(EncoderKind.CONV, tuple(observation_shape), arch.encoder_output_size,
                           hidden=tuple(dense_hidden[:1]), conv_filters=tuple(conv_filters))
    else:
        spec = EncoderSpec(EncoderKind.DENSE, tuple(observation_shape), arch.encoder_output_size,
                           hidden=tuple(dense_hidden))
    return HybridModel(spec, circuit, v.head, action_count,
                       init_hybrid_params(spec, circuit, v.head, action_count, rng), variant=v)


def init_hybrid_params(encoder: EncoderSpec, circuit: CircuitSpec, head: OutputHead,
                       action_count: int, rng: np.random.Generator) -> Params:
    params = _init_encoder(encoder, rng)
    params["quantum"] = init_quantum_params(circuit, rng)
    if OutputHead(head) is OutputHead.QUANTUM_POOLING:
        params["head.scale"] = np.ones(action_count)
        params["head.bias"] = np.zeros(action_count)
    else:
        n_read = len(circuit.readout_qubits)
        params["head.w"] = glorot_uniform(rng, (n_read, action_count), n_read, action_count)
        params["head.b"] = np.zeros(action_count)
    return params


# ----------------------- Classical baseline -----------------------

class ClassicalMLP(QFunction):
    """flatten -> hidden ReLU layers -> linear Q-values."""

    def __init__(self, observation_shape: Sequence[int], action_count: int, rng: np.random.Generator,
                 hidden: Sequence[int] = (128, 64)):
        self.observation_shape = tuple(observation_shape)
        self.action_count = action_count
        self.variant = None
        self.names = [f"mlp.dense{i}" for i in range(len(hidden))] + ["mlp.out"]
        self.params: Params = {}
        fan_in = int(np.prod(self.observation_shape))
        for name, width in zip(self.names, list(hidden) + [action_count]):
            if name == "mlp.out":
                self.params[f"{name}.w"] = glorot_uniform(rng, (fan_in, width), fan_in, width)
            else:
                self.params[f"{name}.w"] = he_uniform(rng, (fan_in, width), fan_in)
            self.params[f"{name}.b"] = np.zeros(width)
            fan_in = width

    def forward_trace(self, observations) -> Tuple[np.ndarray, _Trace]:
        x = self._batch(observations)
        q, cache = _dense_stack_forward(self.params, self.names, x.reshape(x.shape[0], -1), lambda z: z)
        return q, _Trace(x, cache)

    def backward_trace(self, trace: _Trace, grad_q: np.ndarray) -> Params:
        g = self._check_grad_q(trace, grad_q)
        grads: Params = {}
        _dense_stack_backward(self.params, self.names, trace.cache, g, _identity_backward, grads)
        return grads


def build_model(variant: str, observation_shape: Sequence[int], action_count: int,
                rng: np.random.Generator, **arch) -> QFunction:
    """Factory for any configured model: a variant code or the classical baseline."""
    if variant == CLASSICAL_BASELINE:
        return ClassicalMLP(observation_shape, action_count, rng, hidden=arch.get("mlp_hidden", (128, 64)))
    arch.pop("mlp_hidden", None)
    return build_hybrid_model(variant, observation_shape, action_count, rng, **arch)


def parameter_budget_errors(model: QFunction) -> List[str]:
    """Human-readable budget violations for a hybrid model (empty list = OK)."""
    errors: List[str] = []
    total = model.parameter_count()
    quantum = model.quantum_parameter_count()
    if not PARAM_BUDGET[0] <= total <= PARAM_BUDGET[1]:
        errors.append(f"total trainable parameters {total} outside {PARAM_BUDGET}")
    if not QUANTUM_BUDGET[0] <= quantum <= QUANTUM_BUDGET[1]:
        errors.append(f"quantum parameters {quantum} outside {QUANTUM_BUDGET}")
    return errors
