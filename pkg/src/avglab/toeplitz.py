"""Regular summability matrices and the two explicit constructions.

A `SummabilityMatrix` is a row-indexed sparse nonnegative matrix (c_{N,n})
with an explicit support window per row.  `check_regularity` evaluates the
three classical regularity conditions (vanishing columns, row sums -> 1,
bounded absolute row sums) at a finite horizon.

Two constructions are provided:

* `window_from_prefix_row(U, s, N)` expresses the plain interval average
  over [N - s(N), N] as a row combination of the U-weighted prefix averages.
  Its rows satisfy the exact telescoping identity

      DU(k) * sum_{n=k}^{N} c_{N,n} / U(n) = 1 / s(N)

  for every k in the support window, which the builder verifies.

* `interval_from_windows_row(W, s, A, B)` inverts the direction: it writes
  the W-weighted average over [A, B] as a combination of plain window
  averages over [k - s(k), k].  The row is defined by a descending recursion
  and satisfies, for every n in [A, B],

      sum_{j=n}^{B} (c_{N,j}/s(j)) * 1{n >= j - s(j)} = DW(n) / (W(B) - W(A))

  together with entrywise nonnegativity whenever DW is decreasing on [A, B]
  and s moves in steps of 0 or 1.

Both builders raise `HypothesisViolation` naming the failed hypothesis and
index instead of silently producing negative weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, HypothesisViolation
from .numerics import Kahan, csum, csum_array, norm_of
from .sequences import Sequence
from .weights import WeightScheme, _log_grid


@dataclass
class SparseRow:
    """One matrix row: support [lo, hi] with aligned index/value arrays."""

    N: int
    lo: int
    hi: int
    indices: np.ndarray
    values: np.ndarray

    def sum(self) -> float:
        return csum_array(self.values)

    def abs_sum(self) -> float:
        return csum_array(np.abs(self.values))

    def value_at(self, n: int) -> float:
        if n < self.lo or n > self.hi:
            return 0.0
        pos = np.searchsorted(self.indices, n)
        if pos < len(self.indices) and self.indices[pos] == n:
            return float(self.values[pos])
        return 0.0


@dataclass
class SummabilityMatrix:
    row_fn: Callable[[int], SparseRow]
    name: str
    params: dict = field(default_factory=dict)
    _rows: dict = field(default_factory=dict, repr=False)

    def row(self, N: int) -> SparseRow:
        cached = self._rows.get(N)
        if cached is None:
            cached = self.row_fn(N)
            self._rows[N] = cached
        return cached


@dataclass
class RegularityReport:
    column_decay: float
    row_sum_error: float
    abs_row_sup: float
    verdict: bool
    tol: float
    abs_bound: float
    probes: list

    def to_jsonable(self):
        return {
            "column_decay": self.column_decay,
            "row_sum_error": self.row_sum_error,
            "abs_row_sup": self.abs_row_sup,
            "verdict": self.verdict,
            "tol": self.tol,
            "abs_bound": self.abs_bound,
            "probes": self.probes,
        }


def check_regularity(
    mat: SummabilityMatrix,
    horizon: int,
    n_probe: int,
    *,
    tol: float = 1e-2,
    abs_bound: float = 2.0,
) -> RegularityReport:
    """Finite-horizon version of the three regularity conditions.

    Columns n <= n_probe are read off the horizon row; row sums and absolute
    row sums are probed on a log grid over the top half-decade of N, the
    finite stand-in for N -> infinity.
    """
    if horizon < 10 * n_probe:
        raise DomainError("check_regularity: need horizon >= 10 * n_probe")
    top_row = mat.row(horizon)
    column_decay = max(abs(top_row.value_at(n)) for n in range(1, n_probe + 1))
    probes = _log_grid(max(2, int(horizon / math.sqrt(10))), horizon)
    row_sum_error = 0.0
    abs_row_sup = 0.0
    for N in probes:
        r = mat.row(N)
        row_sum_error = max(row_sum_error, abs(r.sum() - 1.0))
        abs_row_sup = max(abs_row_sup, r.abs_sum())
    verdict = (
        column_decay <= tol and row_sum_error <= tol and abs_row_sup <= abs_bound
    )
    return RegularityReport(
        float(column_decay), float(row_sum_error), float(abs_row_sup),
        bool(verdict), tol, abs_bound, probes,
    )


def apply_row(mat: SummabilityMatrix, y: Sequence, N: int):
    """sum_n c_{N,n} y_n over the row's support, compensated."""
    r = mat.row(N)
    terms = [v * y.eval(int(n)) for n, v in zip(r.indices, r.values) if v != 0.0]
    return csum(terms)


# ---------------------------------------------------------------------------
# simple reference matrices
# ---------------------------------------------------------------------------

def identity_matrix() -> SummabilityMatrix:
    return SummabilityMatrix(
        lambda N: SparseRow(N, N, N, np.array([N]), np.array([1.0])),
        name="identity",
    )


def cesaro_matrix() -> SummabilityMatrix:
    return SummabilityMatrix(
        lambda N: SparseRow(
            N, 1, N, np.arange(1, N + 1), np.full(N, 1.0 / N)
        ),
        name="cesaro",
    )


def stuck_column_matrix() -> SummabilityMatrix:
    """c_{N,1} = 1: row sums are fine but column 1 never decays."""
    return SummabilityMatrix(
        lambda N: SparseRow(N, 1, 1, np.array([1]), np.array([1.0])),
        name="stuck_column",
    )


# ---------------------------------------------------------------------------
# construction 1: window average from weighted prefix averages
# ---------------------------------------------------------------------------

def _window_log_deltas(U: WeightScheme, lo: int, N: int):
    """(lu, d, log_du) over n = lo..N+1: log U, DlogU, and log DU.

    The boundary rule DU(1) = U(1) is encoded as DlogU(1) = +inf, which
    makes 1 - e^{-d} evaluate to exactly 1 there.
    """
    lu_all = U.logv_array(N + 1)
    lu = lu_all[lo - 1 : N + 1]
    if lo == 1:
        d = np.diff(lu_all[: N + 1], prepend=-np.inf)
    else:
        d = np.diff(lu_all[lo - 2 : N + 1])
    with np.errstate(invalid="ignore"):
        log_du = lu + np.log(-np.expm1(-d))
    log_du[d == np.inf] = lu[d == np.inf]
    return lu, d, log_du


def window_from_prefix_row(
    U: WeightScheme, s: Sequence, N: int, *, verify: Optional[str] = None
) -> SparseRow:
    """Row expressing the plain average over [N - s(N), N] through U-prefix
    averages:

        c_{N,N} = U(N) / (s(N) DU(N))
        c_{N,n} = U(n) (1/DU(n) - 1/DU(n+1)) / s(N),   N - s(N) <= n <= N-1.

    Entries are assembled from U(n)/DU(n) = 1/(1 - e^{-DlogU(n)}) and
    U(n)/DU(n+1) = e^{-DlogU(n+1)}/(1 - e^{-DlogU(n+1)}), which stay bounded
    for arbitrarily fast U.  Requires DU nondecreasing across the window
    (checked); `verify` runs the telescoping identity for every k ("full",
    the default under __debug__) or every 16th k ("sampled").
    """
    sN = int(s.eval(N))
    if sN < 1 or sN > N - 1:
        raise HypothesisViolation("1 <= s(N) <= N-1", N, f"s(N)={sN}")
    lo = N - sN
    lu, d, log_du = _window_log_deltas(U, lo, N)
    bad = np.flatnonzero(log_du[1:] < log_du[:-1])
    if len(bad):
        raise HypothesisViolation("DU nondecreasing", lo + int(bad[0]) + 1)
    ratio_self = 1.0 / (-np.expm1(-d))          # U(n)/DU(n)
    ratio_next = np.exp(-d) / (-np.expm1(-d))   # U(n)/DU(n+1), shifted use
    values = np.empty(N - lo + 1)
    values[:-1] = (ratio_self[:-2] - ratio_next[1:-1]) / sN
    values[-1] = ratio_self[-2] / sN
    row = SparseRow(N, lo, N, np.arange(lo, N + 1), values)
    mode = verify if verify is not None else ("full" if __debug__ else "sampled")
    if mode != "off":
        _verify_prefix_row(U, row, sN, lu[:-1], log_du[:-1],
                           every=1 if mode == "full" else 16)
    return row


def _verify_prefix_row(U, row, sN, lu, log_du, *, every=1, rel_tol=1e-10):
    """Telescoping certificate: DU(k) sum_{n>=k} c/U(n) == 1/s(N) in-window.

    Slow schemes (log U below 600) use exact linear-scale suffix sums; fast
    schemes evaluate each k's sum with terms c_n DU(k)/U(n), truncating once
    the exp factor drops below 1e-24 (a relative tail under 1e-14).
    """
    target = 1.0 / sN
    width = len(row.values)
    if lu[-1] <= 600.0:
        u_vals = np.exp(lu)
        ratios = row.values / u_vals
        suffix = np.empty(width)
        acc = Kahan()
        for i in range(width - 1, -1, -1):
            acc.add(ratios[i])
            suffix[i] = acc.value()
        du = np.exp(log_du)
        for i in range(0, width, every):
            got = du[i] * suffix[i]
            if abs(got - target) > rel_tol * target:
                raise AssertionError(
                    f"telescoping identity failed at k={row.lo + i}: "
                    f"{got} vs {target}"
                )
        return
    for i in range(0, width, every):
        acc = Kahan()
        base = log_du[i]
        for j in range(i, width):
            factor = base - lu[j]
            if factor < -55.0:
                break
            acc.add(row.values[j] * math.exp(factor))
        got = acc.value()
        if abs(got - target) > rel_tol * target:
            raise AssertionError(
                f"telescoping identity failed at k={row.lo + i}: {got} vs {target}"
            )


def window_from_prefix_matrix(U: WeightScheme, s: Sequence) -> SummabilityMatrix:
    return SummabilityMatrix(
        lambda N: window_from_prefix_row(U, s, N),
        name=f"window_from_prefix[{U.name}]",
        params={"scheme": U.name, "s": s.name},
    )


def window_from_prefix_residual(
    U: WeightScheme, s: Sequence, x: Sequence, N: int
) -> float:
    """| plain average over [N-s(N), N]  -  sum_n c_{N,n} E^U_{<=n} x |."""
    row = window_from_prefix_row(U, s, N, verify="off")
    sN = int(s.eval(N))
    lhs = csum([x.eval(n) for n in range(N - sN, N + 1)]) / sN
    lu = U.logv_array(N)
    prefix = x.eval(1)
    terms = []
    for n in range(1, N + 1):
        if n >= 2:
            w = -math.expm1(lu[n - 2] - lu[n - 1])
            prefix = prefix + w * (x.eval(n) - prefix)
        c = row.value_at(n)
        if c != 0.0:
            terms.append(c * prefix)
    return norm_of(lhs - csum(terms))


# ---------------------------------------------------------------------------
# construction 2: weighted interval average from plain window averages
# ---------------------------------------------------------------------------

def interval_from_windows_row(
    W: WeightScheme,
    s: Sequence,
    A: int,
    B: int,
    *,
    verify: Optional[str] = None,
) -> SparseRow:
    """Descending recursion for the row mapping window averages on
    [k - s(k), k] to the W-weighted average on [A, B].

    W enters directly in log scale (the scheme's stored function), with
    DW required to be decreasing on [A, B] and s required to step by 0 or 1
    with s(k) <= k - 1.  Nonnegativity of the entries is a consequence and is
    asserted at -1e-12.
    """
    if not 1 < A < B:
        raise DomainError(f"interval_from_windows_row: need 1 < A < B, got {A}, {B}")
    wv = W.logv_array(B + 1)

    def Wv(n):
        return wv[n - 1]

    dW = np.diff(wv[A - 2 : B])  # DW(n) for n = A..B
    bad = np.flatnonzero(np.diff(dW) > 0)
    if len(bad):
        raise HypothesisViolation("DW decreasing on [A,B]", A + int(bad[0]) + 1)
    s_vals = np.array([int(s.eval(k)) for k in range(A - 1, B + 1)])  # k = A-1..B
    steps = np.diff(s_vals)
    bad = np.flatnonzero((steps < 0) | (steps > 1))
    if len(bad):
        raise HypothesisViolation("Ds in {0,1}", A + int(bad[0]),
                                  f"step={steps[bad[0]]}")
    ks = np.arange(A - 1, B + 1)
    bad = np.flatnonzero(s_vals > ks - 1)
    if len(bad):
        raise HypothesisViolation("s(k) <= k-1", int(ks[bad[0]]),
                                  f"s={s_vals[bad[0]]}")
    gap = Wv(B) - Wv(A)
    if gap <= 0:
        raise DomainError("interval_from_windows_row: W(B) must exceed W(A)")

    def sv(k):
        return int(s_vals[k - (A - 1)])

    c = np.zeros(B - A + 1)  # c[j] holds c_{N, A+j}
    d_suffix = np.zeros(B - A + 2)  # d_suffix[j] = sum_{i>=j} c[i]/s(A+i)
    c[B - A] = sv(B) * dW[B - A] / gap
    d_suffix[B - A] = c[B - A] / sv(B)
    # z(n) = max{ j <= B : j - s(j) <= n } is nondecreasing in n because
    # j - s(j) steps by 0 or 1; track it with a two-pointer.
    z = B
    for n in range(B - 1, A - 1, -1):
        while z - sv(z) > n:
            z -= 1
        # sum over j in (n, z] of c_j / s(j), via suffix differences
        tail = d_suffix[n + 1 - A] - d_suffix[z + 1 - A]
        cn = sv(n) * (dW[n - A] / gap - tail)
        c[n - A] = cn
        d_suffix[n - A] = d_suffix[n + 1 - A] + cn / sv(n)
    row = SparseRow(B, A, B, np.arange(A, B + 1), c)
    mode = verify if verify is not None else ("full" if __debug__ else "sampled")
    if mode != "off":
        _verify_interval_row(row, s_vals, dW, gap, A, B,
                             every=1 if mode == "full" else 16)
    return row


def _verify_interval_row(row, s_vals, dW, gap, A, B, *, every=1, rel_tol=1e-8):
    """Recompute the defining identity per n by direct summation and assert
    nonnegativity; independent of the suffix accumulator used to build."""
    c = row.values
    for n in range(A, B + 1, every):
        acc = Kahan()
        for j in range(n, B + 1):
            if n >= j - int(s_vals[j - (A - 1)]):
                acc.add(c[j - A] / int(s_vals[j - (A - 1)]))
        target = dW[n - A] / gap
        if abs(acc.value() - target) > rel_tol * abs(target):
            raise AssertionError(
                f"interval row identity failed at n={n}: {acc.value()} vs {target}"
            )
    worst = float(np.min(c))
    if worst < -1e-12:
        raise AssertionError(f"negative row entry {worst} despite hypotheses")


def interval_from_windows_matrix(
    W: WeightScheme, s: Sequence, *, lead: Callable[[int], int]
) -> SummabilityMatrix:
    """Family N -> row over [A(N), N] with A(N) = lead(N)."""

    def build(N):
        return interval_from_windows_row(W, s, int(lead(N)), N, verify="sampled")

    return SummabilityMatrix(
        build, name=f"interval_from_windows[{W.name}]",
        params={"scheme": W.name, "s": s.name},
    )


def interval_from_windows_residual(
    W: WeightScheme, s: Sequence, x: Sequence, A: int, B: int
) -> tuple[float, float]:
    """Residual of the row identity applied to x, plus the tail bound.

    Returns (| sum_k c_{N,k} avg_{[k-s(k),k]} x  -  weighted avg on [A,B] |,
    sup|x| * s(B) DW(B) / (W(B) - W(A))).
    """
    row = interval_from_windows_row(W, s, A, B, verify="off")
    wv = W.logv_array(B)
    gap = wv[B - 1] - wv[A - 1]
    lo = A - int(s.eval(A))
    xs = [x.eval(n) for n in range(min(lo, 1), B + 1)]

    def xv(n):
        return xs[n - min(lo, 1)]

    lhs_terms = []
    for k in range(A, B + 1):
        sk = int(s.eval(k))
        win = csum([xv(n) for n in range(k - sk, k + 1)]) / sk
        lhs_terms.append(row.value_at(k) * win)
    lhs = csum(lhs_terms)
    dWs = np.diff(wv[A - 2 : B])
    rhs = csum([dWs[n - A] * xv(n) for n in range(A, B + 1)]) / gap
    sup_x = max(norm_of(xv(n)) for n in range(min(lo, 1), B + 1))
    bound = sup_x * int(s.eval(B)) * dWs[-1] / gap
    return norm_of(lhs - rhs), float(bound)


def export_rows_csv(mat: SummabilityMatrix, Ns, path) -> None:
    """Dump rows as (N, n, c) triples for offline inspection."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["N", "n", "c"])
        for N in Ns:
            r = mat.row(int(N))
            for n, v in zip(r.indices, r.values):
                writer.writerow([r.N, int(n), repr(float(v))])
