"""Weighted averaging operators with convergence diagnostics.

All operators act through a scheme's weight V = exp(log V):

* `weighted_average`      -- (1/V(N)) sum_{n<=N} DV(n) x_n
* `interval_average`      -- (1/(V(N)-V(M))) sum_{n=M}^{N} DV(n) x_n
* `uniform_average`       -- window sweep estimating the common limit of
                             interval averages over all windows with
                             V(N) - V(M) above a threshold
* `iterated_average`      -- the k-fold composition of weighted_average
* `iterated_average_logkernel` -- single-pass log-power kernel that agrees
                             with the (k+1)-fold composition up to o(1)
* `iteration_tail_report` -- tail-sup profile of the iterates against a limit
* `nested_average_residual` -- | E^U(E^V x) - E^U x |, the two-scheme
                             composition diagnostic

Interval sums follow the convention that the window [M, N] contributes the
N - M + 1 weights DV(M..N) against the normalizer V(N) - V(M); constants
therefore average to c * (V(N) - V(M-1)) / (V(N) - V(M)), not to c.

Every estimator can emit an `AverageReport`: the finite-horizon stand-in for
a limit claim, with tail oscillation measured over the last 10% of the
horizon.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateIntervalError, DomainError
from .numerics import Kahan, csum, csum_array, is_finite_value, jsonable, norm_of
from .sequences import Sequence
from .weights import WeightScheme, normalized_weight

DEFAULT_TOLERANCE = 5e-3
WINDOW_RATIO = 1.25  # geometric grid ratio for the uniform window sweep


@dataclass
class AverageReport:
    """Finite-horizon estimate with a convergence verdict.

    tail_oscillation is the max deviation of partial results from the final
    value over the last 10% of the horizon (for window sweeps: the spread
    across qualifying windows).  converged iff tail_oscillation <= tolerance.
    """

    value: object
    horizon: int
    tail_oscillation: float
    converged: bool
    tolerance: float
    status: str = "ok"
    worst_window: Optional[tuple] = None
    extra: dict = field(default_factory=dict)

    def to_jsonable(self) -> dict:
        out = {
            "value": jsonable(self.value),
            "horizon": self.horizon,
            "tail_oscillation": self.tail_oscillation,
            "converged": self.converged,
            "tolerance": self.tolerance,
            "status": self.status,
        }
        if self.worst_window is not None:
            out["worst_window"] = list(self.worst_window)
        if self.extra:
            out["extra"] = jsonable(self.extra)
        return out


@dataclass
class IntervalFamily:
    """Deterministic window family [M_j, N_j] used by the uniform sweep.

    Pairs are ordered by increasing window gap V(N) - V(M), so the gap is
    nondecreasing along the family.
    """

    pairs: list
    generator: str

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)


# ---------------------------------------------------------------------------
# prefix averages
# ---------------------------------------------------------------------------

def weighted_average(scheme: WeightScheme, x: Sequence, N: int):
    """The N-th weighted average, compensated summation over all N terms."""
    if N < 1:
        raise DomainError("weighted_average: N must be >= 1")
    w = scheme.weight_array(N)
    try:
        xs = x.sample(N)
    except Exception:
        xs = None
    if xs is not None and xs.ndim == 1:
        return csum_array(w * xs)
    acc = Kahan(0.0 * x.eval(1))
    for n in range(1, N + 1):
        if w[n - 1] != 0.0:
            acc.add(w[n - 1] * x.eval(n))
    return acc.value()


def interval_average(scheme: WeightScheme, x: Sequence, M: int, N: int):
    """Weighted average over [M, N]; raises on a degenerate window."""
    if not 1 <= M < N:
        raise DomainError(f"interval_average: need 1 <= M < N, got [{M}, {N}]")
    lv_M = scheme.logv_at(M)
    lv_N = scheme.logv_at(N)
    den = -math.expm1(lv_M - lv_N) if lv_M != -math.inf else 1.0
    if den == 0.0:
        raise DegenerateIntervalError(
            f"V({N}) == V({M}) for scheme {scheme.name}"
        )
    w = scheme.weight_array(N)
    try:
        xs = x.sample(N)
    except Exception:
        xs = None
    if xs is not None and xs.ndim == 1:
        return csum_array(w[M - 1 :] * xs[M - 1 :]) / den
    acc = Kahan(0.0 * x.eval(M))
    for n in range(M, N + 1):
        if w[n - 1] != 0.0:
            acc.add(w[n - 1] * x.eval(n))
    return acc.value() / den


def weighted_average_report(
    scheme: WeightScheme,
    x: Sequence,
    horizon: int,
    tolerance: float = DEFAULT_TOLERANCE,
) -> AverageReport:
    """weighted_average plus tail oscillation over the last 10% of horizon."""
    stream = _prefix_stream(scheme, x, horizon)
    tail_from = max(1, int(math.ceil(0.9 * horizon)))
    final = stream[-1]
    osc = max(norm_of(v - final) for v in stream[tail_from - 1 :])
    return AverageReport(final, horizon, float(osc), bool(osc <= tolerance), tolerance)


def _prefix_stream(scheme: WeightScheme, x: Sequence, N: int) -> list:
    """E(n) for n = 1..N via the overflow-free convex recursion.

    E(n) = e^{-DW(n)} E(n-1) + (1 - e^{-DW(n)}) x_n reproduces the exact
    prefix average in exact arithmetic and never leaves the scale of x.
    """
    lv = scheme.logv_array(N)
    out = [None] * N
    cur = x.eval(1)
    out[0] = cur
    for n in range(2, N + 1):
        w = -math.expm1(lv[n - 2] - lv[n - 1])
        cur = cur + w * (x.eval(n) - cur)
        out[n - 1] = cur
    return out


# ---------------------------------------------------------------------------
# uniform (window) averages
# ---------------------------------------------------------------------------

def interval_family(
    scheme: WeightScheme,
    threshold: float,
    horizon: int,
    ratio: float = WINDOW_RATIO,
) -> IntervalFamily:
    """Geometric grid of windows [M, N] with V(N) - V(M) >= threshold."""
    if threshold <= 0:
        raise DomainError("interval_family: threshold must be positive")
    log_thr = math.log(threshold)

    def gap_ok(M, N):
        lv_M = scheme.logv_at(M)
        lv_N = scheme.logv_at(N)
        if lv_M == -math.inf:
            return lv_N >= log_thr
        if lv_M >= lv_N:
            return False
        return lv_N + math.log(-math.expm1(lv_M - lv_N)) >= log_thr

    def log_gap(M, N):
        lv_M = scheme.logv_at(M)
        lv_N = scheme.logv_at(N)
        if lv_M == -math.inf:
            return lv_N
        return lv_N + math.log(-math.expm1(lv_M - lv_N))

    pairs = []
    M = 1
    seen_m = set()
    while M < horizon:
        if M not in seen_m:
            seen_m.add(M)
            # minimal qualifying N by bisection, then geometric N grid
            if gap_ok(M, horizon):
                lo, hi = M + 1, horizon
                while lo < hi:
                    mid = (lo + hi) // 2
                    if gap_ok(M, mid):
                        hi = mid
                    else:
                        lo = mid + 1
                N = lo
                while N <= horizon:
                    pairs.append((M, int(N)))
                    nxt = int(math.ceil(N * ratio))
                    if nxt == N:
                        nxt += 1
                    if N == horizon:
                        break
                    N = min(nxt, horizon)
        M = max(M + 1, int(math.ceil(M * ratio)))
    pairs.sort(key=lambda mn: log_gap(*mn))
    return IntervalFamily(pairs, f"geometric(ratio={ratio}, threshold={threshold})")


def uniform_average(
    scheme: WeightScheme,
    x: Sequence,
    threshold: float,
    horizon: int,
    tolerance: float = DEFAULT_TOLERANCE,
    *,
    ratio: float = WINDOW_RATIO,
    threads: int = 1,
) -> AverageReport:
    """Estimate the uniform weighted average by a deterministic window sweep.

    Value is the mean over maximal-length windows; tail_oscillation is the
    spread (diameter) of all window values; worst_window maximizes deviation
    from the reported value.  Merge order never matters: all reductions are
    max/mean over the full window set.
    """
    family = interval_family(scheme, threshold, horizon, ratio)
    if len(family) == 0:
        return AverageReport(
            None, horizon, math.inf, False, tolerance, status="inconclusive",
            extra={"reason": "no window reaches the threshold"},
        )
    lv = scheme.logv_array(horizon)
    prefix = _prefix_stream(scheme, x, horizon)

    def window_value(M, N):
        # sum_{M..N} DV x / (V(N)-V(M)) written with prefix averages only
        e_N = prefix[N - 1]
        if M == 1:
            num = e_N
        else:
            rho = math.exp(lv[M - 2] - lv[N - 1])
            num = e_N - rho * prefix[M - 2]
        den = -math.expm1(lv[M - 1] - lv[N - 1]) if lv[M - 1] != -math.inf else 1.0
        if den == 0.0:
            raise DegenerateIntervalError(f"degenerate window [{M}, {N}]")
        return num / den

    jobs = list(family)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(lambda mn: window_value(*mn), jobs))
    else:
        values = [window_value(M, N) for M, N in jobs]

    max_len = max(N - M for M, N in jobs)
    top = [v for (M, N), v in zip(jobs, values) if N - M == max_len]
    value = csum(top) / len(top)
    deviations = [norm_of(v - value) for v in values]
    spread = 0.0
    for i, vi in enumerate(values):  # diameter of the value set
        for vj in values[i + 1 :]:
            d = norm_of(vi - vj)
            if d > spread:
                spread = d
    worst = jobs[int(np.argmax(deviations))]
    return AverageReport(
        value, horizon, float(spread), bool(spread <= tolerance), tolerance,
        worst_window=worst,
        extra={"windows": len(jobs), "generator": family.generator},
    )


# ---------------------------------------------------------------------------
# iterated averages
# ---------------------------------------------------------------------------

def _iterated_stream(scheme, x, k, N, record_from=None):
    """One forward pass computing all iteration levels 1..k at every prefix.

    Returns (final_levels, trace) where trace[j] is the list of level-(j+1)
    values for n >= record_from (empty when record_from is None).
    O(N * k) time, O(k) state.
    """
    lv = scheme.logv_array(N)
    levels = [x.eval(1)] * k
    trace = [[] for _ in range(k)] if record_from is not None else None
    if record_from is not None and record_from <= 1:
        for j in range(k):
            trace[j].append(levels[j])
    for n in range(2, N + 1):
        w = -math.expm1(lv[n - 2] - lv[n - 1])
        cur = x.eval(n)
        for j in range(k):
            levels[j] = levels[j] + w * (cur - levels[j])
            cur = levels[j]
        if record_from is not None and n >= record_from:
            for j in range(k):
                trace[j].append(levels[j])
    return levels, trace


def iterated_average(scheme: WeightScheme, x: Sequence, k: int, N: int):
    """k-fold composition of the weighted average; k = 1 is weighted_average
    itself (same call, hence bit-identical)."""
    if k < 1:
        raise DomainError("iterated_average: k must be >= 1")
    if k == 1:
        return weighted_average(scheme, x, N)
    levels, _ = _iterated_stream(scheme, x, k, N)
    return levels[-1]


def iterated_average_trace(scheme: WeightScheme, x: Sequence, k: int, N: int,
                           record_from: int):
    """All iteration levels plus their trailing traces from record_from on."""
    return _iterated_stream(scheme, x, k, N, record_from=record_from)


def iterated_average_logkernel(scheme: WeightScheme, x: Sequence, k: int, N: int):
    """Single-pass estimate of the (k+1)-fold iterate via the log-power kernel

        sum_n (DV(n)/V(N)) * (log V(N) - log V(n))^k / k! * x_n.

    k = 0 reduces to weighted_average; zero-weight indices are skipped so a
    vanishing V(1) never produces inf * 0.
    """
    if k < 0:
        raise DomainError("iterated_average_logkernel: k must be >= 0")
    w = scheme.weight_array(N)
    lv = scheme.logv_array(N)
    u = lv[-1] - lv
    mask = w > 0.0
    u = np.where(mask, u, 0.0)
    kernel = w * u ** k / math.factorial(k)
    try:
        xs = x.sample(N)
    except Exception:
        xs = None
    if xs is not None and xs.ndim == 1:
        return csum_array(kernel * xs)
    acc = Kahan(0.0 * x.eval(1))
    for n in range(1, N + 1):
        if kernel[n - 1] != 0.0:
            acc.add(kernel[n - 1] * x.eval(n))
    return acc.value()


@dataclass
class IterationTailProfile:
    """Tail-sup of each iteration level against a candidate limit L.

    tail_sups[j] = sup over the last 10% of the horizon of |E(j+1)(x - L)|.
    The verdict asks the profile to be nonincreasing in the level (with 10%
    slack) and to dip below the tolerance.
    """

    levels: list
    tail_sups: list
    tolerance: float
    window: tuple
    decreasing: bool
    below_tolerance: bool

    @property
    def verdict(self) -> bool:
        return self.decreasing and self.below_tolerance

    def to_jsonable(self):
        return jsonable(
            {
                "levels": self.levels,
                "tail_sups": self.tail_sups,
                "tolerance": self.tolerance,
                "window": list(self.window),
                "decreasing": self.decreasing,
                "below_tolerance": self.below_tolerance,
                "verdict": self.verdict,
            }
        )


def iteration_tail_report(
    scheme: WeightScheme,
    x: Sequence,
    L,
    k_max: int,
    horizon: int,
    tolerance: float = DEFAULT_TOLERANCE,
) -> IterationTailProfile:
    """Profile sup_{N in [0.9 horizon, horizon]} |E(k)(x - L)| for k <= k_max."""
    if k_max < 2:
        raise DomainError("iteration_tail_report: k_max must be >= 2")
    shifted = Sequence(
        lambda n: x.eval(n) - L, name=f"{x.name}-L", domain_start=x.domain_start
    )
    tail_from = max(1, int(math.ceil(0.9 * horizon)))
    _, trace = _iterated_stream(scheme, shifted, k_max, horizon, record_from=tail_from)
    sups = [max(norm_of(v) for v in level) for level in trace]
    slack = 1.10
    decreasing = all(sups[j + 1] <= sups[j] * slack for j in range(len(sups) - 1))
    below = min(sups) <= tolerance
    return IterationTailProfile(
        list(range(1, k_max + 1)), [float(s) for s in sups], tolerance,
        (tail_from, horizon), bool(decreasing), bool(below),
    )


# ---------------------------------------------------------------------------
# two-scheme composition
# ---------------------------------------------------------------------------

def nested_average_residual(
    outer: WeightScheme, inner: WeightScheme, x: Sequence, N: int
) -> float:
    """| E^outer_{n<=N}( E^inner_{k<=n} x ) - E^outer_{n<=N} x |.

    A diagnostic for scheme pairs where the outer weight is subordinate to
    the inner one (see constructions.check_subordination); expected to decay
    with N for such pairs.  Single O(N) pass.
    """
    w_out = outer.weight_array(N)
    lv_in = inner.logv_array(N)
    inner_avg = x.eval(1)
    composed_terms = []
    direct_terms = []
    for n in range(1, N + 1):
        if n >= 2:
            w = -math.expm1(lv_in[n - 2] - lv_in[n - 1])
            inner_avg = inner_avg + w * (x.eval(n) - inner_avg)
        if w_out[n - 1] != 0.0:
            composed_terms.append(w_out[n - 1] * inner_avg)
            direct_terms.append(w_out[n - 1] * x.eval(n))
    return norm_of(csum(composed_terms) - csum(direct_terms))


def report_is_sane(report: AverageReport) -> bool:
    """All numeric fields finite; inconclusive reports are exempt on value."""
    if report.status != "ok":
        return True
    return is_finite_value(report.value) and math.isfinite(report.tail_oscillation)
