"""Concrete measure-preserving systems with exact correlation measures.

Two system kinds:

* `CircleRotation(alpha)` -- x -> x + alpha mod 1 on [0,1) with Lebesgue
  measure; sets are finite unions of half-open arcs and multi-shift
  correlations mu(A over all shifted copies) are computed by an exact
  circular sweep.  Phases n*alpha mod 1 come from a direct multiply-and-
  reduce per n, never from repeated addition, so there is no drift.

* `CyclicSystem(q, step)` -- x -> x + step mod q on Z_q with counting
  measure; sets are bitmasks and correlations are popcounts, exact.

`recurrence_sequence` turns a system, a set, and a shift rule n -> integer
shift vector into the bounded real sequence of correlation values that the
averaging engine consumes, with a cache keyed by the sorted shift tuple.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence as PySequence

import numpy as np

from .averages import (
    AverageReport,
    uniform_average,
    weighted_average_report,
)
from .calculus import poly_delta
from .errors import DomainError
from .numerics import jsonable
from .sequences import IntPolynomial, Sequence
from .weights import (
    WeightScheme,
    builtin_scheme,
    classify_difference_order,
    log_weight_form,
    scheme_from_function,
)


def _continued_fraction_depth(x: float, max_depth: int = 24) -> int:
    """Number of continued-fraction steps before the remainder vanishes."""
    depth = 0
    y = x
    for _ in range(max_depth):
        frac = y - math.floor(y)
        if frac < 1e-12:
            return depth
        y = 1.0 / frac
        depth += 1
    return depth


# ---------------------------------------------------------------------------
# sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArcUnion:
    """Finite union of half-open arcs [a, b) inside [0, 1), normalized to
    pairwise-disjoint sorted pieces that never wrap."""

    arcs: tuple

    @staticmethod
    def of(*arcs) -> "ArcUnion":
        pieces = []
        for a, b in arcs:
            a %= 1.0
            b = b % 1.0 if b != 1.0 else 1.0
            if a == b:
                continue
            if a < b:
                pieces.append((a, b))
            else:  # wraps through 1
                pieces.append((a, 1.0))
                if b > 0.0:
                    pieces.append((0.0, b))
        pieces.sort()
        merged = []
        for a, b in pieces:
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        if not merged:
            raise DomainError("ArcUnion: empty set")
        return ArcUnion(tuple(merged))

    @property
    def measure(self) -> float:
        return math.fsum(b - a for a, b in self.arcs)

    def shift(self, t: float) -> "ArcUnion":
        return ArcUnion.of(*[(a - t, b - t) for a, b in self.arcs])

    def contains(self, xs: np.ndarray) -> np.ndarray:
        bounds = np.array([v for arc in self.arcs for v in arc])
        return np.searchsorted(bounds, xs, side="right") % 2 == 1


@dataclass(frozen=True)
class CyclicSet:
    """Subset of Z_q stored as a bitmask (bit x <=> x in the set)."""

    mask: int
    q: int

    @staticmethod
    def of(elements, q: int) -> "CyclicSet":
        m = 0
        for x in elements:
            m |= 1 << (x % q)
        if m == 0:
            raise DomainError("CyclicSet: empty set")
        return CyclicSet(m, q)

    @property
    def measure(self) -> float:
        return self.mask.bit_count() / self.q

    def rotate(self, c: int) -> "CyclicSet":
        """The set {x : x + c in self}."""
        c %= self.q
        full = (1 << self.q) - 1
        m = ((self.mask >> c) | (self.mask << (self.q - c))) & full
        return CyclicSet(m, self.q)


# ---------------------------------------------------------------------------
# systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CircleRotation:
    alpha: float = math.sqrt(2) - 1

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DomainError("rotation angle must lie in (0, 1)")
        if _continued_fraction_depth(self.alpha) < 12:
            raise DomainError(
                f"alpha={self.alpha} looks rational (short continued fraction)"
            )

    def phase(self, m: int) -> float:
        # direct multiply-and-reduce; repeated addition would drift
        return math.fmod(m * self.alpha, 1.0)

    def correlation(self, A: ArcUnion, shifts, include_base: bool = True) -> float:
        ms = sorted(set(shifts) | ({0} if include_base else set()))
        if not ms:
            return A.measure
        unions = [A.shift(self.phase(m)) for m in ms]
        events = []
        for un in unions:
            for a, b in un.arcs:
                events.append((a, 1))
                events.append((b, -1))
        events.sort()
        need = len(unions)
        depth = 0
        prev = 0.0
        total = 0.0
        for pos, step in events:
            if depth == need:
                total += pos - prev
            prev = pos
            depth += step
        return min(max(total, 0.0), 1.0)

    def correlation_mc(self, A: ArcUnion, shifts, rng, samples: int = 1_000_000,
                       include_base: bool = True) -> float:
        """Monte Carlo cross-check of `correlation` (binomial error)."""
        ms = sorted(set(shifts) | ({0} if include_base else set()))
        xs = rng.random(samples)
        inside = np.ones(samples, dtype=bool)
        for m in ms:
            inside &= A.shift(self.phase(m)).contains(xs)
        return float(np.count_nonzero(inside)) / samples


@dataclass(frozen=True)
class CyclicSystem:
    q: int
    step: int = 1

    def __post_init__(self):
        if self.q < 2:
            raise DomainError("cyclic system needs q >= 2")

    def correlation(self, A: CyclicSet, shifts, include_base: bool = True) -> float:
        if A.q != self.q:
            raise DomainError("set and system sizes disagree")
        ms = sorted(set(shifts) | ({0} if include_base else set()))
        if not ms:
            return A.measure
        mask = (1 << self.q) - 1
        for m in ms:
            mask &= A.rotate(m * self.step).mask
        return mask.bit_count() / self.q

    def correlation_bruteforce(self, A: CyclicSet, shifts,
                               include_base: bool = True) -> float:
        """Point-by-point enumeration oracle; must match exactly."""
        ms = sorted(set(shifts) | ({0} if include_base else set()))
        hits = 0
        for x in range(self.q):
            if all((A.mask >> ((x + m * self.step) % self.q)) & 1 for m in ms):
                hits += 1
        return hits / self.q


def correlation(system, A, shifts, include_base: bool = True) -> float:
    """Multi-shift correlation measure, dispatching on the system kind."""
    return system.correlation(A, shifts, include_base=include_base)


# ---------------------------------------------------------------------------
# recurrence sequences and the averaging experiment
# ---------------------------------------------------------------------------

def floor_shift(value: float) -> int:
    return int(math.floor(value))


def recurrence_sequence(
    system,
    A,
    f: Sequence,
    polys: PySequence[IntPolynomial] | None = None,
    *,
    window: int | None = None,
) -> Sequence:
    """n -> correlation at shifts floor(p_i(D) f(n)).

    Either pass difference polynomials explicitly, or `window=k` for the
    consecutive-shift family floor(f(n)), ..., floor(f(n+k)) evaluated
    directly.  Correlations are cached on the sorted shift tuple so reruns
    across averaging schemes cost nothing.
    """
    if (polys is None) == (window is None):
        raise DomainError("recurrence_sequence: pass exactly one of polys/window")
    cache: dict = {}
    if polys is not None:
        shift_seqs = [poly_delta(p, f) for p in polys]

        def shifts_at(n):
            return tuple(sorted({floor_shift(g.eval(n)) for g in shift_seqs}))

    else:

        def shifts_at(n):
            return tuple(sorted({floor_shift(f.eval(n + i)) for i in range(window + 1)}))

    def fn(n):
        key = shifts_at(n)
        v = cache.get(key)
        if v is None:
            v = system.correlation(A, key)
            cache[key] = v
        return v

    label = f"recurrence[{getattr(A, 'measure', 0):.3f}]"
    return Sequence(fn, name=label, bound=1.0)


@dataclass
class RecurrenceExperiment:
    """Side-by-side plain and weighted averages of a recurrence sequence."""

    cesaro: AverageReport
    weighted: AverageReport
    uniform: AverageReport
    difference: float
    positivity_margin: float
    positive: bool
    elapsed_seconds: float
    horizon: int
    scheme_name: str

    @property
    def positivity_verdict(self) -> str:
        # distinguishes a real margin from desk-scale noise
        return "positive with margin" if self.positive else "inconclusive"

    def to_jsonable(self):
        return jsonable(
            {
                "cesaro": self.cesaro.to_jsonable(),
                "weighted": self.weighted.to_jsonable(),
                "uniform": self.uniform.to_jsonable(),
                "difference": self.difference,
                "positivity_margin": self.positivity_margin,
                "positivity_verdict": self.positivity_verdict,
                "elapsed_seconds": round(self.elapsed_seconds, 3),
                "horizon": self.horizon,
                "scheme": self.scheme_name,
            }
        )


def recurrence_experiment(
    system,
    A,
    f: Sequence,
    *,
    order: int,
    window: int = 1,
    horizon: int = 100_000,
    positivity_floor: float = 1e-4,
    uniform_threshold: float | None = None,
) -> RecurrenceExperiment:
    """Average the recurrence sequence three ways and compare.

    The weight is the (order-1)-th difference of f (certified first); its
    log form drives both the weighted average and the uniform window sweep.
    """
    t0 = time.perf_counter()
    x = recurrence_sequence(system, A, f, window=window)
    base = scheme_from_function(f, order, horizon=min(horizon, 20_000))
    w_scheme = log_weight_form(base)
    cesaro = weighted_average_report(builtin_scheme("cesaro"), x, horizon)
    weighted = weighted_average_report(w_scheme, x, horizon)
    if uniform_threshold is None:
        top = base.logv_at(horizon)
        uniform_threshold = max(top / 10.0, 1.0)
    uniform = uniform_average(w_scheme, x, uniform_threshold, horizon)
    diff = abs(cesaro.value - weighted.value)
    margin = min(cesaro.value, weighted.value)
    return RecurrenceExperiment(
        cesaro=cesaro,
        weighted=weighted,
        uniform=uniform,
        difference=float(diff),
        positivity_margin=float(margin),
        positive=bool(margin >= positivity_floor),
        elapsed_seconds=time.perf_counter() - t0,
        horizon=horizon,
        scheme_name=w_scheme.name,
    )
