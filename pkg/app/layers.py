# app/layers.py
"""
Classical layers with explicit reverse-mode gradients (numpy only).

Conventions: dense inputs (batch, features), weights (in, out);
conv2d inputs NHWC (batch, height, width, channels), kernels (kh, kw, c_in, c_out).
"""
from __future__ import annotations

from typing import Tuple

import numpy as np

from app.errors import ShapeError

# ----------------------- Dense -----------------------

def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0] or b.shape != (w.shape[1],):
        raise ShapeError(f"dense: input {x.shape}, weights {w.shape}, bias {b.shape} are incompatible")
    return x @ w + b


def dense_backward(x: np.ndarray, w: np.ndarray, grad_out: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (grad_x, grad_w, grad_b)."""
    if grad_out.shape != (x.shape[0], w.shape[1]):
        raise ShapeError(f"dense: upstream gradient {grad_out.shape} does not match output ({x.shape[0]}, {w.shape[1]})")
    return grad_out @ w.T, x.T @ grad_out, grad_out.sum(axis=0)


# ----------------------- Conv2d -----------------------

def _conv_out(size: int, k: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - k) // stride + 1


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int = 1, padding: int = 0) -> np.ndarray:
    if x.ndim != 4 or w.ndim != 4 or x.shape[3] != w.shape[2] or b.shape != (w.shape[3],):
        raise ShapeError(f"conv2d: input {x.shape}, kernel {w.shape}, bias {b.shape} are incompatible")
    kh, kw, _, c_out = w.shape
    xp = np.pad(x, ((0, 0), (padding, padding), (padding, padding), (0, 0))) if padding else x
    ho = _conv_out(x.shape[1], kh, stride, padding)
    wo = _conv_out(x.shape[2], kw, stride, padding)
    if ho < 1 or wo < 1:
        raise ShapeError(f"conv2d: kernel {kh}x{kw} does not fit input {x.shape[1]}x{x.shape[2]}")
    out = np.zeros((x.shape[0], ho, wo, c_out))
    for di in range(kh):
        for dj in range(kw):
            patch = xp[:, di:di + stride * (ho - 1) + 1:stride, dj:dj + stride * (wo - 1) + 1:stride, :]
            out += patch @ w[di, dj]
    return out + b


def conv2d_backward(x: np.ndarray, w: np.ndarray, grad_out: np.ndarray, stride: int = 1,
                    padding: int = 0) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (grad_x, grad_w, grad_b)."""
    kh, kw, _, c_out = w.shape
    ho = _conv_out(x.shape[1], kh, stride, padding)
    wo = _conv_out(x.shape[2], kw, stride, padding)
    if grad_out.shape != (x.shape[0], ho, wo, c_out):
        raise ShapeError(f"conv2d: upstream gradient {grad_out.shape} does not match output {(x.shape[0], ho, wo, c_out)}")
    xp = np.pad(x, ((0, 0), (padding, padding), (padding, padding), (0, 0))) if padding else x
    grad_xp = np.zeros_like(xp, dtype=float)
    grad_w = np.zeros_like(w, dtype=float)
    for di in range(kh):
        for dj in range(kw):
            rows = slice(di, di + stride * (ho - 1) + 1, stride)
            cols = slice(dj, dj + stride * (wo - 1) + 1, stride)
            patch = xp[:, rows, cols, :]
            grad_w[di, dj] = np.einsum("bhwc,bhwo->co", patch, grad_out)
            grad_xp[:, rows, cols, :] += grad_out @ w[di, dj].T
    grad_x = grad_xp[:, padding:padding + x.shape[1], padding:padding + x.shape[2], :] if padding else grad_xp
    return grad_x, grad_w, grad_out.sum(axis=(0, 1, 2))


# ----------------------- Activations -----------------------

def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return grad_out * (x > 0)


def tanh_pi(x: np.ndarray) -> np.ndarray:
    """Bounded angle output in (-π, π)."""
    return np.pi * np.tanh(x)


def tanh_pi_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return grad_out * np.pi * (1.0 - np.tanh(x) ** 2)


# ----------------------- Init -----------------------

def he_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


def glorot_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)
