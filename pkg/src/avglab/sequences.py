"""Lazily evaluated, memoized sequences and integer polynomials.

A `Sequence` wraps a deterministic map n -> value on {domain_start,
domain_start+1, ...}.  Values may be real, complex, or small fixed-dimension
numpy vectors.  Evaluation is memoized so that iterated difference operators
and long averaging sweeps stay O(N); memo tables are safe for concurrent
read/insert because eval is deterministic (racing writers store identical
values) and sequences are immutable after construction.
"""
from __future__ import annotations

import math
from collections import OrderedDict
from typing import Callable, Optional

import numpy as np

from .errors import DomainError
from .numerics import norm_of


class Sequence:
    """Deterministic map n -> scalar with an unbounded (or LRU-capped) memo.

    Parameters
    ----------
    fn : callable n -> value
    name : label used in reports and error messages
    domain_start : first valid index (default 1)
    bound : optional norm bound; checked on every access when __debug__
    vector_fn : optional vectorized evaluator taking an int64 numpy array,
        used as a fast path for bulk sampling; must agree with fn
    memo_cap : if set, memoization switches to an LRU of that size
    """

    __slots__ = (
        "_fn", "_vfn", "name", "domain_start", "bound",
        "_memo", "_memo_cap", "_samples",
    )

    def __init__(
        self,
        fn: Callable[[int], object],
        *,
        name: str = "",
        domain_start: int = 1,
        bound: Optional[float] = None,
        vector_fn=None,
        memo_cap: Optional[int] = None,
    ):
        self._fn = fn
        self._vfn = vector_fn
        self.name = name or getattr(fn, "__name__", "seq")
        self.domain_start = domain_start
        self.bound = bound
        self._memo_cap = memo_cap
        self._memo = OrderedDict() if memo_cap else {}
        self._samples = {}

    def __repr__(self):
        return f"Sequence({self.name!r}, start={self.domain_start})"

    def eval(self, n: int):
        if n < self.domain_start:
            raise DomainError(
                f"{self.name}: index {n} below domain start {self.domain_start}"
            )
        memo = self._memo
        hit = memo.get(n)
        if hit is not None:
            if self._memo_cap:
                memo.move_to_end(n)
            return hit
        v = self._fn(n)
        if __debug__ and self.bound is not None:
            if norm_of(v) > self.bound * (1 + 1e-12):
                raise AssertionError(
                    f"{self.name}: |value|={norm_of(v)} exceeds bound {self.bound} at n={n}"
                )
        memo[n] = v
        if self._memo_cap and len(memo) > self._memo_cap:
            memo.popitem(last=False)
        return v

    __call__ = eval

    def sample(self, hi: int, lo: Optional[int] = None) -> np.ndarray:
        """Materialize values on [lo, hi] as a numpy array (cached by hi).

        Only prefix samples (lo == domain_start) are cached; other ranges are
        sliced out of the cached prefix.
        """
        start = self.domain_start
        if lo is None:
            lo = start
        if lo < start or hi < lo:
            raise DomainError(f"{self.name}: bad sample range [{lo}, {hi}]")
        best = self._samples.get("prefix")
        if best is None or len(best) < hi - start + 1:
            if self._vfn is not None:
                arr = np.asarray(self._vfn(np.arange(start, hi + 1, dtype=np.int64)))
            else:
                probe = self.eval(start)
                dtype = complex if isinstance(probe, (complex, np.complexfloating)) else float
                arr = np.fromiter(
                    (self.eval(n) for n in range(start, hi + 1)),
                    dtype=dtype,
                    count=hi - start + 1,
                )
            self._samples["prefix"] = arr
            best = arr
        return best[lo - start : hi - start + 1]

    def shifted(self, k: int) -> "Sequence":
        """The sequence n -> self(n + k); domain start shrinks accordingly."""
        return Sequence(
            lambda n: self.eval(n + k),
            name=f"{self.name}<<{k}",
            domain_start=max(self.domain_start - k, self.domain_start if k >= 0 else 1),
            bound=self.bound,
        )


def from_values(values, *, name="tabulated", domain_start=1, bound=None) -> Sequence:
    vals = list(values)

    def fn(n):
        i = n - domain_start
        if i >= len(vals):
            raise DomainError(f"{name}: index {n} beyond tabulated range")
        return vals[i]

    return Sequence(fn, name=name, domain_start=domain_start, bound=bound)


class IntPolynomial:
    """Integer-coefficient polynomial a_0 + a_1 x + ... + a_m x^m.

    The zero polynomial is the empty coefficient tuple; otherwise the leading
    coefficient is nonzero.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        cs = [int(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1 if self.coeffs else -1

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __add__(self, other: "IntPolynomial") -> "IntPolynomial":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        merged = list(a)
        for i, c in enumerate(b):
            merged[i] += c
        return IntPolynomial(merged)

    def __eq__(self, other):
        return isinstance(other, IntPolynomial) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"IntPolynomial({list(self.coeffs)})"

    @classmethod
    def one_minus_x_power(cls, k: int) -> "IntPolynomial":
        """(1 - x)^k, the k-step backward shift in difference-operator form."""
        return cls([(-1) ** j * math.comb(k, j) for j in range(k + 1)])
