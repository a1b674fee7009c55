"""
Registry of built-in boundary functions for C arcs.

Domain files refer to data by name ("expr-id") plus parameters; this module
turns those into callables. Strict: unknown names and bad parameters raise.
"""

from enum import Enum
from typing import Any, Callable, Dict, Mapping

import numpy as np

from ..errors import InputError
from .arcs import BoundaryFunction


class BoundaryExpr(str, Enum):
    """Supported boundary-function names"""
    ZERO = "zero"
    CONST = "const"
    LINEAR = "linear"
    SCHERK = "scherk"
    LOG_BARRIER = "log-barrier"


def _zero(params: Mapping[str, Any]) -> BoundaryFunction:
    return lambda x, y: np.zeros_like(np.asarray(x, dtype=float))


def _const(params: Mapping[str, Any]) -> BoundaryFunction:
    c = float(params["value"])
    return lambda x, y: np.full_like(np.asarray(x, dtype=float), c)


def _linear(params: Mapping[str, Any]) -> BoundaryFunction:
    """a*x + b*y + c"""
    a, b, c = float(params.get("a", 0.0)), float(params.get("b", 0.0)), float(params.get("c", 0.0))
    return lambda x, y: a * np.asarray(x, dtype=float) + b * np.asarray(y, dtype=float) + c


def _scherk(params: Mapping[str, Any]) -> BoundaryFunction:
    """log cos x - log cos y, the minimal Scherk graph over (-pi/2, pi/2)^2"""
    return lambda x, y: np.log(np.cos(np.asarray(x, dtype=float))) - np.log(np.cos(np.asarray(y, dtype=float)))


def _log_barrier(params: Mapping[str, Any]) -> BoundaryFunction:
    """-scale * sum_k log|p - q_k|: continuous on the open arc, +inf at the poles q_k"""
    poles = np.atleast_2d(np.asarray(params["poles"], dtype=float))
    scale = float(params.get("scale", 1.0))
    offset = float(params.get("offset", 0.0))

    def fn(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        total = np.zeros(np.broadcast(x, y).shape)
        with np.errstate(divide="ignore"):
            for qx, qy in poles:
                total -= np.log(np.hypot(x - qx, y - qy))
        return offset + scale * total

    return fn


class BoundaryRegistry:
    """Factory for boundary functions - STRICT, NO FALLBACKS"""

    _builders: Dict[BoundaryExpr, Callable[[Mapping[str, Any]], BoundaryFunction]] = {
        BoundaryExpr.ZERO: _zero,
        BoundaryExpr.CONST: _const,
        BoundaryExpr.LINEAR: _linear,
        BoundaryExpr.SCHERK: _scherk,
        BoundaryExpr.LOG_BARRIER: _log_barrier,
    }

    @classmethod
    def create(cls, name: str, params: Mapping[str, Any] = None) -> BoundaryFunction:
        """
        Build the boundary function registered under `name`

        Raises:
            InputError: unknown name or missing/invalid parameters
        """
        try:
            expr = BoundaryExpr(name)
        except ValueError as e:
            raise InputError(f"unknown boundary expression {name!r}; "
                             f"known: {[b.value for b in cls._builders]}") from e
        try:
            return cls._builders[expr](dict(params or {}))
        except (KeyError, TypeError, ValueError) as e:
            raise InputError(f"bad parameters for boundary expression {name!r}: {e}") from e

    @classmethod
    def register(cls, name: BoundaryExpr, builder: Callable[[Mapping[str, Any]], BoundaryFunction]) -> None:
        if not isinstance(name, BoundaryExpr):
            raise InputError(f"invalid expression name: {name}. Must be BoundaryExpr enum.")
        cls._builders[name] = builder

    @classmethod
    def list_supported(cls) -> list:
        return list(cls._builders.keys())


__all__ = ["BoundaryExpr", "BoundaryRegistry"]
