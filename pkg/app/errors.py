# app/errors.py
from __future__ import annotations


class QRLError(Exception):
    """Root of every error raised by the app package."""


class SizeError(QRLError, ValueError):
    """Register or layer too small/large to build or simulate."""


class QubitIndexError(QRLError, IndexError):
    """Qubit index out of range, or duplicated where distinct indices are required."""


class BindingError(QRLError, ValueError):
    """Parameter vector does not match the circuit's slots."""


class CircuitStateError(QRLError, RuntimeError):
    """Operation on a qubit that has already been pooled out."""


class ShapeError(QRLError, ValueError):
    """Tensor, parameter group or checkpoint shape mismatch."""


class ConfigError(QRLError, ValueError):
    """Invalid experiment / architecture / study configuration."""


class ArgumentError(QRLError, ValueError):
    """Invalid argument to an operation (bad action index, empty batch, ...)."""


class EnvStateError(QRLError, RuntimeError):
    """Environment stepped after its episode terminated."""
