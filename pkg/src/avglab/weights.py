"""Weight schemes: increasing weight functions held in log form.

A `WeightScheme` stores W = log V for an increasing weight V, so that
super-polynomially growing weights like V(n) = e^{sqrt n} never have to be
materialized.  The normalized weight of index n at horizon N,

    DV(n) / V(N) = exp(W(n) - W(N)) * (1 - exp(-DW(n)))        (n >= 2)
    DV(1) / V(N) = exp(W(1) - W(N))                            (boundary)

telescopes to exactly 1 over n <= N, which is the invariant every averaging
operator in this package leans on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .calculus import delta_stack, delta_iter
from .errors import ConstructionError, DomainError
from .numerics import one_minus_exp_neg
from .sequences import Sequence


@dataclass(frozen=True)
class WeightScheme:
    """An increasing weight V represented by its log, W = log V."""

    logv: Sequence
    name: str
    horizon_hint: int = 100_000
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def logv_at(self, n: int) -> float:
        return float(self.logv.eval(n))

    def delta_logv(self, n: int) -> float:
        """DW(n) = W(n) - W(n-1); defined for n >= domain_start + 1."""
        return self.logv_at(n) - self.logv_at(n - 1)

    def logv_array(self, hi: int) -> np.ndarray:
        arr = self._cache.get("logv")
        if arr is None or len(arr) < hi:
            arr = np.asarray(self.logv.sample(hi), dtype=float)
            self._cache["logv"] = arr
        return arr[:hi]

    def weight_array(self, N: int) -> np.ndarray:
        """Normalized weights (DV(n)/V(N)) for n = 1..N in one vector."""
        if N < 1:
            raise DomainError("weight_array: N must be >= 1")
        lv = self.logv_array(N)
        top = lv[-1]
        if not math.isfinite(top):
            raise DomainError(f"{self.name}: log V({N}) is not finite")
        with np.errstate(invalid="ignore"):
            w = np.exp(lv - top) * (-np.expm1(-np.diff(lv, prepend=-np.inf)))
        # boundary convention DV(1) = V(1); exp(-inf) underflows cleanly to 0
        w[0] = math.exp(lv[0] - top) if lv[0] != -math.inf else 0.0
        return w

    def validate(self, horizon: Optional[int] = None) -> None:
        """Probe that log V is strictly increasing on a logarithmic grid."""
        hi = horizon or min(self.horizon_hint, 10_000)
        probes = _log_grid(2, hi)
        prev = self.logv_at(probes[0] - 1)
        for n in probes:
            cur = self.logv_at(n)
            if not cur > prev:
                raise ConstructionError(
                    f"{self.name}: log V not strictly increasing near n={n}"
                )
            prev = cur


def normalized_weight(scheme: WeightScheme, n: int, N: int) -> float:
    """DV(n)/V(N) evaluated in log domain; n = 1 uses the DV(1)=V(1) rule."""
    if not 1 <= n <= N:
        raise DomainError(f"normalized_weight: need 1 <= n <= N, got n={n}, N={N}")
    lv_n = scheme.logv_at(n)
    lv_N = scheme.logv_at(N)
    if n == 1:
        return math.exp(lv_n - lv_N) if lv_n != -math.inf else 0.0
    d = lv_n - scheme.logv_at(n - 1)
    return math.exp(lv_n - lv_N) * one_minus_exp_neg(d)


def log_weight_form(scheme: WeightScheme) -> WeightScheme:
    """The scheme whose weight function is this scheme's log weight.

    Averaging with the returned scheme weights by D(log V) and measures
    window lengths by log V(N) - log V(M), which is the right scale for
    uniform averages of fast-growing V.
    """
    base = scheme.logv

    def fn(n):
        v = base.eval(n)
        if v <= 0:
            return -math.inf
        return math.log(v)

    return WeightScheme(
        logv=Sequence(fn, name=f"log({scheme.name})", domain_start=base.domain_start),
        name=f"log_form({scheme.name})",
        horizon_hint=scheme.horizon_hint,
    )


# ---------------------------------------------------------------------------
# built-in catalog
# ---------------------------------------------------------------------------

def _cesaro() -> WeightScheme:
    return WeightScheme(
        Sequence(lambda n: math.log(n), name="log n",
                 vector_fn=lambda ns: np.log(ns.astype(float))),
        name="cesaro",
    )


def _log_scheme() -> WeightScheme:
    # V(n) = log n; V(1) = 0 puts zero mass on n = 1, encoded as log V = -inf.
    def fn(n):
        return math.log(math.log(n)) if n > 1 else -math.inf

    def vfn(ns):
        with np.errstate(divide="ignore"):
            return np.log(np.log(ns.astype(float)))

    return WeightScheme(Sequence(fn, name="log log n", vector_fn=vfn), name="log")


def _exp_sqrt() -> WeightScheme:
    return WeightScheme(
        Sequence(lambda n: math.sqrt(n), name="sqrt n",
                 vector_fn=lambda ns: np.sqrt(ns.astype(float))),
        name="exp_sqrt",
    )


def exp_pow_scheme(a: float, c: float = 1.0) -> WeightScheme:
    """log V(n) = c * n^a; grows faster than any polynomial for a in (0,1]."""
    if not 0 < a <= 1 or c <= 0:
        raise ConstructionError("exp_pow_scheme needs 0 < a <= 1 and c > 0")
    return WeightScheme(
        Sequence(lambda n: c * n ** a, name=f"{c}*n^{a}",
                 vector_fn=lambda ns: c * ns.astype(float) ** a),
        name=f"exp_pow({a},{c})",
    )


def power_scheme(c: float) -> WeightScheme:
    """V(n) = n^c, i.e. log V = c log n; c = 1 recovers the cesaro scheme."""
    if c <= 0:
        raise ConstructionError("power_scheme needs c > 0")
    return WeightScheme(
        Sequence(lambda n: c * math.log(n), name=f"{c}*log n",
                 vector_fn=lambda ns: c * np.log(ns.astype(float))),
        name=f"power({c})",
    )


_BUILTINS = {
    "cesaro": _cesaro,
    "log": _log_scheme,
    "exp_sqrt": _exp_sqrt,
}

_REGISTRY: dict[str, WeightScheme] = {}


def builtin_scheme(name: str) -> WeightScheme:
    """Look up a scheme by name; parametric names use family(arg,...) form."""
    if name in _REGISTRY:
        return _REGISTRY[name]
    if name in _BUILTINS:
        return _BUILTINS[name]()
    if name.startswith("exp_pow(") and name.endswith(")"):
        args = [float(s) for s in name[8:-1].split(",")]
        return exp_pow_scheme(*args)
    if name.startswith("power(") and name.endswith(")"):
        return power_scheme(float(name[6:-1]))
    from .errors import CatalogError

    raise CatalogError(f"unknown weight scheme {name!r}")


def register_scheme(name: str, scheme: WeightScheme) -> None:
    _REGISTRY[name] = scheme


def scheme_names() -> list[str]:
    return sorted(set(_BUILTINS) | set(_REGISTRY))


# ---------------------------------------------------------------------------
# growth classification
# ---------------------------------------------------------------------------

@dataclass
class ClassificationReport:
    """Finite-horizon verdict on where a function sits in the difference
    hierarchy: `order` is the least ell whose ell-th difference decays while
    the (ell-1)-th grows.  All verdicts are heuristic window checks, never
    limit statements; `evidence` lists (condition, probe window, verdict).
    """

    order: Optional[int]
    tempered: bool
    monotone_from: int
    evidence: list
    horizon: int

    @property
    def certified(self) -> bool:
        return self.order is not None


def _monotone_start(g: np.ndarray, *, decreasing: bool, slack: float = 1e-12):
    """First index (1-based n) from which g is positive and monotone."""
    if len(g) < 8:
        return None
    ok = g > 0
    steps = g[1:] <= g[:-1] * (1 + slack) if decreasing else g[1:] >= g[:-1] * (1 - slack)
    bad = np.flatnonzero(~(ok[1:] & steps & ok[:-1]))
    start = 2 if len(bad) == 0 else int(bad[-1]) + 3  # step i covers n=i+2
    return start if start <= len(g) else None


def classify_difference_order(
    f: Sequence,
    horizon: int,
    ell_max: int = 4,
    *,
    growth_factor: float = 2.0,
    tempered_bound: float = 10.0,
) -> ClassificationReport:
    """Scan D^ell f for the least order with decaying-difference behavior.

    Certifies ell when, from some monotone_from on, D^ell f is positive and
    nonincreasing, has halved by the horizon, and D^{ell-1} f has grown by
    `growth_factor` over the same window.  The tempered flag additionally
    requires n * D^ell f(n) to be eventually increasing and to exceed
    `tempered_bound` by the horizon.
    """
    if horizon < 100:
        raise DomainError("classify_difference_order: horizon must be >= 100")
    if ell_max < 1:
        raise DomainError("classify_difference_order: ell_max must be >= 1")
    vals = np.asarray(f.sample(horizon), dtype=float)
    stack = delta_stack(vals, ell_max)
    evidence = []
    for ell in range(1, ell_max + 1):
        g, prev = stack[ell], stack[ell - 1]
        m = _monotone_start(g, decreasing=True)
        window = (m or horizon, horizon)
        if m is None or m > horizon // 4:
            evidence.append((f"D^{ell} monotone decay window", window, False))
            continue
        decayed = g[-1] < 0.5 * g[m - 1]
        grew = prev[-1] > 0 and prev[-1] >= growth_factor * abs(prev[m - 1])
        evidence.append((f"D^{ell} positive decreasing, halved", window, bool(decayed)))
        evidence.append((f"D^{ell - 1} grew x{growth_factor}", window, bool(grew)))
        if decayed and grew:
            t = np.arange(1, horizon + 1, dtype=float) * g
            tm = _monotone_start(t, decreasing=False)
            tempered = (
                tm is not None
                and tm <= horizon // 4
                and t[-1] > tempered_bound
            )
            evidence.append(
                (f"n*D^{ell} increasing beyond {tempered_bound}",
                 (tm or horizon, horizon), bool(tempered))
            )
            return ClassificationReport(ell, bool(tempered), m, evidence, horizon)
    return ClassificationReport(None, False, horizon, evidence, horizon)


@dataclass
class GrowthTrace:
    verdict: bool
    rows: list  # (n, n * DW(n))
    note: str = ""


def tempered_growth_check(scheme: WeightScheme, horizon: int,
                          *, bound: float = 10.0) -> GrowthTrace:
    """Finite surrogate for n * DW(n) -> infinity.

    True when the probed values are eventually increasing and the last one
    exceeds `bound`; the trace records every sampled value.
    """
    lv = scheme.logv_array(horizon)
    t = np.arange(1, horizon + 1, dtype=float) * np.diff(lv, prepend=0.0)
    probes = _log_grid(max(4, scheme.logv.domain_start + 2), horizon)
    rows = [(int(n), float(t[n - 1])) for n in probes]
    m = _monotone_start(t[3:], decreasing=False)
    verdict = m is not None and m + 3 <= horizon // 4 and t[-1] > bound
    note = "" if verdict else "no increasing tail exceeding bound found"
    return GrowthTrace(bool(verdict), rows, note)


def scheme_from_function(f: Sequence, order: int, *,
                         horizon: int = 10_000) -> WeightScheme:
    """Weight scheme with log V = D^{order-1} f, for certified f only."""
    report = classify_difference_order(f, horizon, ell_max=order)
    if report.order != order:
        raise ConstructionError(
            f"cannot build scheme from {f.name}: classification returned "
            f"order={report.order}, wanted {order}; evidence={report.evidence}"
        )
    return WeightScheme(
        delta_iter(f, order - 1),
        name=f"from({f.name},{order})",
        horizon_hint=horizon,
    )


def _log_grid(lo: int, hi: int, per_decade: int = 8) -> list[int]:
    if hi <= lo:
        return [hi]
    count = max(2, int(per_decade * math.log10(hi / lo)) + 1)
    grid = np.unique(np.round(np.geomspace(lo, hi, count)).astype(int))
    return [int(n) for n in grid]
