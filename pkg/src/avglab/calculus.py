"""Backward difference calculus on sequences.

The difference operator used throughout is

    D f(n) = f(n) - f(n-1)      for n > domain_start,
    D f(n) = f(n)               at n = domain_start,

i.e. the sequence is implicitly extended by zero below its domain.  With that
boundary convention prefix sums of D f telescope exactly back to f, and the
shift operator S f(n) = f(n-1) factors as S = 1 - D, so

    f(n - k) = (1 - D)^k f(n) = sum_j (-1)^j C(k, j) D^j f(n)

wherever n - k stays inside the domain.  Note that substituting the plain
shift f(n-j) for D^j f(n) is *not* valid: for p(x) = 3x^3 - 5x^2 + x - 1 the
expansion of p(D) f in shifts is -2 f(n) + 4 f(n-2) - 3 f(n-3), obtained by
expanding p(1 - S), not by replacing x^j with the j-step shift.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError
from .numerics import csum
from .sequences import IntPolynomial, Sequence


def delta(f: Sequence, n: int):
    """D f(n) with the left-endpoint convention D f(start) = f(start)."""
    if n < f.domain_start:
        raise DomainError(f"delta: n={n} below domain start {f.domain_start}")
    if n == f.domain_start:
        return f.eval(n)
    return f.eval(n) - f.eval(n - 1)


def delta_iter(f: Sequence, ell: int) -> Sequence:
    """The iterated difference D^ell f as a memoized sequence; D^0 f = f."""
    if ell < 0:
        raise DomainError("delta_iter: order must be nonnegative")
    level = f
    for i in range(ell):
        prev = level
        level = Sequence(
            lambda n, g=prev: delta(g, n),
            name=f"D{i + 1}({f.name})",
            domain_start=f.domain_start,
        )
    return level


def poly_delta(p: IntPolynomial, f: Sequence) -> Sequence:
    """p(D) f = sum_i a_i D^i f, evaluated pointwise with compensated sums."""
    levels = [delta_iter(f, i) for i in range(p.degree + 1)]
    coeffs = p.coeffs

    def fn(n):
        if not coeffs:
            return 0.0
        return csum([c * g.eval(n) for c, g in zip(coeffs, levels) if c])

    return Sequence(fn, name=f"p(D){f.name}", domain_start=f.domain_start)


def shift_via_delta(f: Sequence, k: int) -> Sequence:
    """The k-step backward shift n -> f(n-k) written in difference form.

    Evaluates sum_j (-1)^j C(k, j) D^j f(n), which telescopes to f(n-k); the
    domain requires n - k >= domain_start.
    """
    if k < 0:
        raise DomainError("shift_via_delta: k must be nonnegative")
    levels = [delta_iter(f, j) for j in range(k + 1)]
    signs = [(-1) ** j * math.comb(k, j) for j in range(k + 1)]

    def fn(n):
        if n - k < f.domain_start:
            raise DomainError(
                f"shift_via_delta: n-k={n - k} below domain start {f.domain_start}"
            )
        return csum([s * g.eval(n) for s, g in zip(signs, levels)])

    return Sequence(fn, name=f"shift{k}({f.name})", domain_start=f.domain_start + k)


def delta_array(values: np.ndarray) -> np.ndarray:
    """Vectorized D over a prefix sample (index 0 holds f at domain start)."""
    return np.diff(values, prepend=values.dtype.type(0))


def delta_stack(values: np.ndarray, depth: int) -> list[np.ndarray]:
    """[f, Df, D^2 f, ...] up to the requested depth, as prefix arrays."""
    out = [np.asarray(values, dtype=float)]
    for _ in range(depth):
        out.append(delta_array(out[-1]))
    return out
