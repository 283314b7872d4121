"""Growth of the packing: curvature counts, orbital counts and exponent fits.

Two counting functions are supported.  ``count_by_curvature`` counts
packing elements (per translation class of the cusp) with curvature at
most ``t``.  ``count_orbital`` counts orbit images ``v`` of a class ``C``
with ``v . D < B`` for an interior class ``D``.  Both should grow like a
power of the bound with the critical exponent of the packing.
"""
from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .group import GeneratorSet, orient_walls
from .lattice import GramContext, pair
from .orbit import Budget, enumerate_orbit

# Hausdorff dimension of the Apollonian gasket (McMullen, 1998).
DELTA_APOLLONIAN = 1.305688

CURVATURE = "curvature"
INTERSECTION = "intersection"


class CountingError(ValueError):
    pass


class InsufficientData(CountingError):
    pass


class ChamberError(CountingError):
    pass


class CountBudgetExceeded(CountingError):
    """The orbit grew past the element budget before reaching the bound.

    ``largest_complete`` is the largest grid threshold whose count is exact;
    ``series`` holds the exact prefix.
    """

    def __init__(self, message, largest_complete=None, series=None):
        super().__init__(message)
        self.largest_complete = largest_complete
        self.series = series


@dataclass
class CountSeries:
    thresholds: list[float]
    counts: list[int]
    mode: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.thresholds) != len(self.counts):
            raise CountingError("thresholds and counts differ in length")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise CountingError("thresholds must increase")
        if any(b < a for a, b in zip(self.counts, self.counts[1:])):
            raise CountingError("counts must be nondecreasing")

    def __len__(self):
        return len(self.thresholds)

    def restrict(self, hi: float) -> CountSeries:
        n = bisect.bisect_right(self.thresholds, hi)
        return CountSeries(self.thresholds[:n], self.counts[:n], self.mode, dict(self.meta))

    def count_at(self, t: float) -> int:
        i = self.thresholds.index(t)
        return self.counts[i]

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(["mode", "threshold", "count"])
        for t, c in zip(self.thresholds, self.counts):
            w.writerow([self.mode, f"{t:.9g}", c])
        return buf.getvalue()


def geometric_grid(lo: float, hi: float, per_decade: int = 32) -> list[float]:
    """Thresholds ``10**(j/per_decade)`` lying in ``[lo, hi]``, ending at ``hi``."""
    if lo <= 0 or hi < lo:
        raise CountingError("grid needs 0 < lo <= hi")
    j0 = math.ceil(per_decade * math.log10(lo) - 1e-9)
    j1 = math.floor(per_decade * math.log10(hi) + 1e-9)
    grid = [10 ** (j / per_decade) for j in range(j0, j1 + 1)]
    if not grid or grid[-1] < hi * (1 - 1e-12):
        grid.append(float(hi))
    return grid


def _cumulative(values: Sequence, thresholds: Sequence[float], square: bool, strict: bool) -> list[int]:
    """Counts of ``values`` below each threshold, compared exactly.

    With ``square`` the values are squared quantities and are compared with
    the threshold squared.
    """
    vals = sorted(values)
    out = []
    for t in thresholds:
        b = Fraction(t) ** 2 if square else Fraction(t)
        out.append(bisect.bisect_left(vals, b) if strict else bisect.bisect_right(vals, b))
    return out


# --------------------------------------------------------------------------
# curvature counts


def curvature_values(case, t_max: float, *, workers: int = 1, max_elements: int = 5_000_000, printed: bool = False):
    """Exact normalized squared curvatures of all packing elements with curvature <= t_max.

    Returns ``(values, record, scale_sq)``.
    """
    from .packings import ResolvedCase, _case_chart, resolve_case

    res = case if isinstance(case, ResolvedCase) else resolve_case(case)
    chart = _case_chart(res)
    limit = Fraction(t_max) ** 2 * chart.scale_sq
    gs = res.printed_gamma() if printed else res.gamma()
    budget = Budget(max_curvature_sq=limit, max_elements=max_elements)
    record = enumerate_orbit(res.ctx, gs, res.seed, budget, reduce_translations=True, workers=workers)
    values = [e.value / chart.scale_sq for e in record.elements]
    return values, record, chart.scale_sq


def count_by_curvature(
    case,
    t_max: float,
    *,
    t_min: float = 1.0,
    per_decade: int = 32,
    workers: int = 1,
    max_elements: int = 5_000_000,
) -> CountSeries:
    """Cumulative counts ``N(t)`` of packing elements with curvature <= t.

    Curvature is normalized so the strip (or slab) has width 1; elements
    are counted once per translation class of the cusp.
    """
    grid = geometric_grid(t_min, t_max, per_decade)
    values, record, scale_sq = curvature_values(case, t_max, workers=workers, max_elements=max_elements)
    counts = _cumulative(values, grid, square=True, strict=False)
    meta = {"elements": len(record), "t_max": t_max}
    if record.truncation is not None:
        # values strictly below the complete bound are exact
        bound = record.complete_bound / scale_sq if record.complete_bound is not None else Fraction(0)
        ok = [i for i, t in enumerate(grid) if Fraction(t) ** 2 < bound]
        n = ok[-1] + 1 if ok else 0
        series = CountSeries(grid[:n], counts[:n], CURVATURE, meta)
        largest = grid[n - 1] if n else None
        raise CountBudgetExceeded(
            f"curvature enumeration stopped at {len(record)} elements; counts are exact up to t = {largest}",
            largest,
            series,
        )
    return CountSeries(grid, counts, CURVATURE, meta)


# --------------------------------------------------------------------------
# orbital counts


@dataclass
class ChamberVerdict:
    ok: bool
    D: tuple[int, ...]
    norm: int
    wall_pairings: dict[str, int]
    face_pairing: int
    reason: str = ""


def chamber_test(ctx: GramContext, gs: GeneratorSet, D: Sequence[int], face: Sequence[int]) -> ChamberVerdict:
    """Is ``D`` a positive class strictly inside the chamber of the walls and the face?

    Walls are oriented inward (pairwise nonnegative pairings with each other
    and the face); ``D`` must pair positively with all of them.
    """
    D = tuple(int(x) for x in D)
    walls = orient_walls(ctx, gs.normals, face)
    pw = {name: pair(ctx, D, w) for name, w in zip(gs.names, walls)}
    pf = pair(ctx, D, face)
    dd = pair(ctx, D, D)
    reason = ""
    if dd <= 0:
        reason = f"D.D = {dd} is not positive"
    elif pf <= 0:
        reason = f"D pairs to {pf} with the face"
    else:
        bad = [n for n, p in pw.items() if p <= 0]
        if bad:
            reason = f"D is not on the inner side of {', '.join(bad)}"
    return ChamberVerdict(not reason, D, dd, pw, pf, reason)


def chamber_search(ctx: GramContext, gs: GeneratorSet, face: Sequence[int], max_height: int = 4) -> ChamberVerdict:
    """Smallest-height class passing ``chamber_test`` (ties: smallest D.D, then coordinates)."""
    k = ctx.dim
    walls = orient_walls(ctx, gs.normals, face)
    J = np.array(ctx.gram, dtype=np.int64)
    # rows: the face and the inward walls, as linear functionals
    F = np.array([tuple(face)] + walls, dtype=np.int64) @ J
    for h in range(1, max_height + 1):
        rng = np.arange(-h, h + 1, dtype=np.int64)
        grid = np.stack(np.meshgrid(*([rng] * k), indexing="ij"), axis=-1).reshape(-1, k)
        grid = grid[np.abs(grid).max(axis=1) == h]
        norms = np.einsum("ij,jk,ik->i", grid, J, grid)
        ok = (norms > 0) & np.all(grid @ F.T > 0, axis=1)
        if ok.any():
            hits = sorted((int(nv), tuple(int(x) for x in v)) for nv, v in zip(norms[ok], grid[ok]))
            verdict = chamber_test(ctx, gs, hits[0][1], face)
            if verdict.ok:
                return verdict
            raise ChamberError("vectorized screen and exact chamber test disagree")
    raise ChamberError(f"no chamber class of height <= {max_height}")


@dataclass
class DescentReport:
    depth: int
    checked: int
    violations: list[tuple[int, ...]]
    parent_violations: int

    @property
    def ok(self) -> bool:
        return not self.violations and self.parent_violations == 0


def check_descent(ctx: GramContext, gs: GeneratorSet, C, D, depth: int = 20) -> DescentReport:
    """Empirical check that ``v.D`` can always be lowered by some generator.

    Every orbit element other than ``C`` found within ``depth`` steps must
    have a neighbour with strictly smaller pairing, and its breadth-first
    parent must have a smaller pairing too.  These are the facts that make a
    pairing-bounded search complete.
    """
    record = enumerate_orbit(ctx, gs, C, Budget(max_depth=depth), pairing_with=D)
    mats = gs.int_matrices()
    violations = []
    parent_bad = 0
    root = record.seed
    for e in record.elements:
        if e.normal == root:
            continue
        vals = []
        for m in mats:
            img = tuple(sum(a * b for a, b in zip(row, e.normal)) for row in m)
            vals.append(abs(pair(ctx, img, D)))
        if min(vals) >= e.value:
            violations.append(e.normal)
        if e.parent is not None and record.get(e.parent).value >= e.value:
            parent_bad += 1
    return DescentReport(depth, len(record) - 1, violations, parent_bad)


def count_orbital(
    ctx: GramContext,
    gs: GeneratorSet,
    C: Sequence[int],
    D: Sequence[int],
    B_max: float,
    *,
    face: Sequence[int] | None = None,
    b_min: float | None = None,
    per_decade: int = 32,
    workers: int = 1,
    max_elements: int = 5_000_000,
    descent_depth: int = 20,
    thresholds: Sequence[float] | None = None,
) -> CountSeries:
    """Counts ``N(C, D, B) = #{v in orbit(C) : v.D < B}`` on a geometric grid of ``B``.

    ``face`` (defaults to ``C``) is used for the chamber test of ``D``.
    Explicit ``thresholds`` (all at most ``B_max``) replace the grid.
    """
    C = tuple(int(x) for x in C)
    D = tuple(int(x) for x in D)
    if pair(ctx, D, D) <= 0:
        raise ChamberError("D must have positive square")
    verdict = chamber_test(ctx, gs, D, face if face is not None else C)
    if not verdict.ok:
        raise ChamberError(verdict.reason)
    base = pair(ctx, C, D)
    if b_min is None:
        b_min = max(1.0, float(base))
    if thresholds is not None:
        grid = [float(t) for t in thresholds]
        if grid and grid[-1] > B_max:
            raise CountingError("thresholds exceed B_max")
    elif B_max <= b_min:
        grid = [float(B_max)] if B_max > 0 else []
    else:
        grid = geometric_grid(b_min, B_max, per_decade)
    limit = math.ceil(B_max)
    record = enumerate_orbit(
        ctx, gs, C, Budget(max_pairing=limit, max_elements=max_elements), pairing_with=D, workers=workers
    )
    if record.truncation is not None:
        raise CountBudgetExceeded(f"orbital enumeration stopped at {len(record)} elements", None, None)
    values = [e.value for e in record.elements]
    counts = _cumulative(values, grid, square=False, strict=True)
    meta = {"D": list(D), "C": list(C), "elements": len(record)}
    if descent_depth:
        rep = check_descent(ctx, gs, C, D, descent_depth)
        meta["descent_checked"] = rep.checked
        meta["descent_violations"] = len(rep.violations) + rep.parent_violations
    return CountSeries(grid, counts, INTERSECTION, meta)


# --------------------------------------------------------------------------
# exponent fits


class PowerLawExponent(RegressorMixin, BaseEstimator):
    """Least-squares fit of ``log N = delta log t + c``.

    ``X`` holds thresholds and ``y`` counts.  Points outside ``fit_range``
    or with counts below ``min_count`` are ignored.
    """

    def __init__(self, fit_range=None, min_count: int = 10, min_points: int = 5):
        self.fit_range = fit_range
        self.min_count = min_count
        self.min_points = min_points

    def _select(self, X, y):
        t = np.asarray(X, dtype=float).reshape(-1)
        n = np.asarray(y, dtype=float).reshape(-1)
        if t.shape != n.shape:
            raise InsufficientData("thresholds and counts differ in length")
        mask = (n >= self.min_count) & (t > 0)
        if self.fit_range is not None:
            lo, hi = self.fit_range
            # a little slack so grid points on the boundary are kept
            mask &= (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))
        return t[mask], n[mask]

    def fit(self, X, y):
        t, n = self._select(X, y)
        if len(t) < self.min_points:
            raise InsufficientData(f"need {self.min_points} points with count >= {self.min_count}, got {len(t)}")
        A = np.column_stack([np.log(t), np.ones_like(t)])
        coef, _, _, _ = np.linalg.lstsq(A, np.log(n), rcond=None)
        self.delta_, self.intercept_ = float(coef[0]), float(coef[1])
        resid = np.log(n) - A @ coef
        self.residual_ = float(resid @ resid)
        self.n_points_ = int(len(t))
        self.range_ = (float(t.min()), float(t.max()))
        return self

    def predict(self, X):
        check_is_fitted(self, "delta_")
        t = np.asarray(X, dtype=float).reshape(-1)
        return np.exp(self.intercept_) * t**self.delta_


@dataclass
class ExponentFit:
    delta_hat: float
    fit_range: tuple[float, float]
    residual: float
    n_points: int
    method: str = "log-log least squares"
    intercept: float = 0.0

    def summary(self, reference: float = DELTA_APOLLONIAN) -> dict:
        return {
            "delta_hat": self.delta_hat,
            "range": list(self.fit_range),
            "residual": self.residual,
            "n_points": self.n_points,
            "method": self.method,
            "reference_delta": reference,
        }


def fit_exponent(series: CountSeries, fit_range=None, *, min_count: int = 10, min_points: int = 5) -> ExponentFit:
    est = PowerLawExponent(fit_range, min_count, min_points).fit(series.thresholds, series.counts)
    rng = tuple(fit_range) if fit_range is not None else est.range_
    return ExponentFit(est.delta_, (float(rng[0]), float(rng[1])), est.residual_, est.n_points_, intercept=est.intercept_)


def matched_range(series: CountSeries, count_lo: int, count_hi: int) -> tuple[float, float]:
    """Threshold range over which ``series`` climbs from ``count_lo`` to ``count_hi``."""
    lo = next((t for t, c in zip(series.thresholds, series.counts) if c >= count_lo), None)
    hi = None
    for t, c in zip(series.thresholds, series.counts):
        if c <= count_hi:
            hi = t
    if lo is None or hi is None or hi <= lo:
        raise InsufficientData(f"series does not span counts {count_lo}..{count_hi}")
    return lo, hi


def synthetic_series(t_max: float = 1e4, power: float = 2.0, per_decade: int = 32) -> CountSeries:
    """Exact power law ``floor(t**power)`` on the standard grid, for self-tests."""
    grid = geometric_grid(1.0, t_max, per_decade)
    return CountSeries(grid, [math.floor(t**power) for t in grid], "synthetic")
