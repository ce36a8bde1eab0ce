"""Compensated summation and overflow-safe log-domain primitives.

Every sum in the package that may exceed a few thousand terms goes through
`csum` / `Kahan` so that weights spanning hundreds of orders of magnitude do
not lose the small terms.  `math.fsum` (Shewchuk's exact algorithm) is the
workhorse for materialized term lists; `Kahan` covers streaming updates.
"""
from __future__ import annotations

import math
from typing import Iterable

import numpy as np


class Kahan:
    """Kahan compensated running sum; value may be float or complex."""

    __slots__ = ("total", "_comp")

    def __init__(self, zero=0.0):
        self.total = zero
        self._comp = zero * 0

    def add(self, value):
        y = value - self._comp
        t = self.total + y
        self._comp = (t - self.total) - y
        self.total = t

    def value(self):
        return self.total


def csum(values: Iterable):
    """Compensated sum of floats, complexes, or equally-shaped vectors."""
    vals = values if isinstance(values, list) else list(values)
    if not vals:
        return 0.0
    head = vals[0]
    if isinstance(head, np.ndarray):
        stacked = np.stack(vals)
        return np.array([math.fsum(stacked[:, i]) for i in range(stacked.shape[1])])
    if isinstance(head, (complex, np.complexfloating)):
        return complex(
            math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals)
        )
    return math.fsum(vals)


def csum_array(a: np.ndarray):
    """Compensated sum of a 1-d numpy array (real or complex)."""
    if np.iscomplexobj(a):
        return complex(math.fsum(a.real.tolist()), math.fsum(a.imag.tolist()))
    return math.fsum(a.tolist())


def one_minus_exp_neg(d: float) -> float:
    """1 - e^{-d} computed without cancellation; d may be +inf."""
    return -math.expm1(-d)


def log_exp_diff(la: float, lb: float) -> float:
    """log(e^la - e^lb) for la > lb, stable when the two are close."""
    if lb == -math.inf:
        return la
    if lb >= la:
        raise ValueError("log_exp_diff needs la > lb")
    return la + math.log(-math.expm1(lb - la))


def norm_of(v) -> float:
    """Banach-space norm used for scalars and fixed-dimension vectors."""
    if isinstance(v, np.ndarray):
        return float(np.linalg.norm(v))
    return abs(v)


def is_finite_value(v) -> bool:
    if isinstance(v, np.ndarray):
        return bool(np.all(np.isfinite(v)))
    if isinstance(v, complex):
        return math.isfinite(v.real) and math.isfinite(v.imag)
    return math.isfinite(v)


def jsonable(v):
    """Coerce engine values (complex, numpy) into JSON-safe structures."""
    if isinstance(v, np.ndarray):
        return [jsonable(x) for x in v.tolist()]
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": float(v.real), "im": float(v.imag)}
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {k: jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    return v
