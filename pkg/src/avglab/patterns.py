"""Bitmask scans for shifted configurations inside integer sets.

An `IntegerSet` is a bitmask over [1, n_max] (bit i <=> i in the set).  For
a shift rule n -> (floor f(n), ..., floor f(n+k)) the density of starting
points a with {a, a + floor f(n), ..., a + floor f(n+k)} inside E is one
AND of shifted masks; `good_shift_set` collects the n whose density clears
a threshold and `tail_window_report` checks short trailing windows
[N - ceil(N^(1/2+eps)), N] for members of that set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .errors import DomainError, RangeExhaustedError
from .numerics import jsonable
from .sequences import Sequence


@dataclass(frozen=True)
class IntegerSet:
    """Subset of [1, n_max] as a single big-int bitmask; bit 0 unused."""

    mask: int
    n_max: int

    def __post_init__(self):
        if self.mask < 0 or self.mask >> (self.n_max + 1):
            raise DomainError("IntegerSet: mask has bits beyond n_max")
        if self.mask & 1:
            raise DomainError("IntegerSet: bit 0 must stay clear")

    @staticmethod
    def of(elements: Iterable[int], n_max: int) -> "IntegerSet":
        m = 0
        for x in elements:
            if 1 <= x <= n_max:
                m |= 1 << x
        return IntegerSet(m, n_max)

    @staticmethod
    def full(n_max: int) -> "IntegerSet":
        return IntegerSet(((1 << (n_max + 1)) - 1) & ~1, n_max)

    def __contains__(self, x: int) -> bool:
        return 1 <= x <= self.n_max and bool((self.mask >> x) & 1)

    def __len__(self) -> int:
        return self.mask.bit_count()

    @property
    def density(self) -> float:
        return len(self) / self.n_max

    def members(self) -> list[int]:
        out = []
        m, x = self.mask, 0
        while m:
            low = m & -m
            x = low.bit_length() - 1
            out.append(x)
            m ^= low
        return out


def _range_mask(lo: int, hi: int) -> int:
    if hi < lo:
        return 0
    return ((1 << (hi + 1)) - 1) & ~((1 << lo) - 1)


def pattern_shifts(f: Sequence, k: int, n: int) -> tuple[int, ...]:
    """Sorted deduplicated shifts (floor f(n+i))_{i=0..k}."""
    return tuple(sorted({int(math.floor(f.eval(n + i))) for i in range(k + 1)}))


def pattern_density(E: IntegerSet, f: Sequence, k: int, n: int) -> float:
    """Fraction of valid starting points a with the whole configuration
    {a} + {0, floor f(n), ..., floor f(n+k)} inside E."""
    shifts = pattern_shifts(f, k, n)
    top = shifts[-1]
    hi = E.n_max - top
    if hi < 1:
        raise RangeExhaustedError(
            f"shift floor f(n+k)={top} leaves no room below n_max={E.n_max}"
        )
    m = E.mask
    for d in shifts:
        m &= E.mask >> d
    m &= _range_mask(1, hi)
    return m.bit_count() / hi


def pattern_density_naive(E: IntegerSet, f: Sequence, k: int, n: int) -> float:
    """Per-a loop oracle for pattern_density; exact match required."""
    shifts = pattern_shifts(f, k, n)
    hi = E.n_max - shifts[-1]
    if hi < 1:
        raise RangeExhaustedError("range exhausted")
    hits = sum(
        1
        for a in range(1, hi + 1)
        if a in E and all((a + d) in E for d in shifts)
    )
    return hits / hi


def good_shift_set(
    E: IntegerSet,
    f: Sequence,
    k: int,
    theta: float,
    n_range: tuple[int, int],
) -> IntegerSet:
    """{ n in n_range : pattern_density > theta } as an IntegerSet.

    Indices whose shifts exhaust the range are treated as density 0 (they
    cannot carry a configuration at this n_max).
    """
    if theta <= 0:
        raise DomainError("good_shift_set: theta must be positive")
    lo, hi = n_range
    m = 0
    for n in range(lo, hi + 1):
        try:
            d = pattern_density(E, f, k, n)
        except RangeExhaustedError:
            continue
        if d > theta:
            m |= 1 << n
    return IntegerSet(m, hi)


@dataclass
class WindowHitReport:
    rows: list  # (N, window_lo, hit, window_average, clipped)
    epsilon: float

    @property
    def all_hit(self) -> bool:
        return all(hit for _, _, hit, _, _ in self.rows)

    def to_jsonable(self):
        return jsonable({"epsilon": self.epsilon, "rows": self.rows,
                         "all_hit": self.all_hit})


def tail_window_report(S: IntegerSet, epsilon: float, N_list) -> WindowHitReport:
    """For each N, scan [N - ceil(N^(1/2+eps)), N] for members of S."""
    if not 0 < epsilon <= 0.5:
        raise DomainError("tail_window_report: epsilon must lie in (0, 1/2]")
    rows = []
    for N in N_list:
        width = int(math.ceil(N ** (0.5 + epsilon)))
        lo = N - width
        clipped = lo < 1
        lo = max(lo, 1)
        window = S.mask & _range_mask(lo, min(N, S.n_max))
        count = window.bit_count()
        rows.append(
            (int(N), int(lo), count > 0, count / (min(N, S.n_max) - lo + 1), clipped)
        )
    return WindowHitReport(rows, epsilon)


# ---------------------------------------------------------------------------
# set generators
# ---------------------------------------------------------------------------

def blocks_set(n_max: int) -> IntegerSet:
    """Union of blocks [4^j, 4^j + 4^j/2): positive upper density along the
    block scales, density gaps in between."""
    m = 0
    j = 0
    while 4 ** j <= n_max:
        lo = 4 ** j
        hi = min(lo + lo // 2 - 1, n_max) if lo > 1 else 1
        if hi >= lo:
            m |= _range_mask(lo, hi)
        j += 1
    return IntegerSet(m & ~1, n_max)


def congruence_set(n_max: int, q: int, residues: Iterable[int]) -> IntegerSet:
    rs = {r % q for r in residues}
    m = 0
    for x in range(1, n_max + 1):
        if x % q in rs:
            m |= 1 << x
    return IntegerSet(m, n_max)


def random_set(n_max: int, density: float, seed: int) -> IntegerSet:
    import numpy as np

    rng = np.random.default_rng(seed)
    picks = np.flatnonzero(rng.random(n_max) < density) + 1
    return IntegerSet.of(picks.tolist(), n_max)


def squares_set(n_max: int) -> IntegerSet:
    return IntegerSet.of(
        (i * i for i in range(1, int(math.isqrt(n_max)) + 1)), n_max
    )


def set_from_file(path, n_max: int) -> IntegerSet:
    with open(path) as fh:
        return IntegerSet.of((int(line) for line in fh if line.strip()), n_max)
