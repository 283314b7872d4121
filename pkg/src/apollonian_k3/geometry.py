"""Boundary pictures of walls: hyperplanes as circles/spheres in a chart.

With a null vector ``E`` sent to infinity, the wall ``n . x = 0`` becomes a
(k-2)-sphere of curvature ``|E.n| / sqrt(-n.n)`` centred at the null vector
``R_n(E)``, and the boundary carries the Euclidean metric
``|PQ|^2 = 2 P.Q / ((P.E)(Q.E))``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exact import IntVector, exact_sqrt, is_square, nullspace, primitive, rank
from .lattice import GramContext, pair

INTERSECTING = "intersecting"
TANGENT = "tangent"
DISJOINT = "disjoint"


class GeometryError(ValueError):
    pass


def canonical_normal(ctx: GramContext, n: Sequence[int], E: Sequence[int] | None = None) -> IntVector:
    """Primitive representative with ``E.n >= 0``; ties broken by first nonzero coordinate > 0."""
    v = primitive(n)
    s = pair(ctx, E, v) if E is not None else 0
    if s < 0 or (s == 0 and next(x for x in v if x) < 0):
        v = tuple(-x for x in v)
    return v


def curvature_sq(ctx: GramContext, E: Sequence[int], n: Sequence[int]) -> Fraction:
    """Squared curvature ``(E.n)^2 / (-n.n)`` of the wall ``n`` seen from ``E``."""
    if pair(ctx, E, E) != 0:
        raise GeometryError("E is not a null vector")
    nn = pair(ctx, n, n)
    if nn >= 0:
        raise GeometryError(f"{tuple(n)} is not spacelike (n.n = {nn})")
    return Fraction(pair(ctx, E, n) ** 2, -nn)


def classify_pair(ctx: GramContext, n: Sequence[int], m: Sequence[int]) -> str:
    """Compare ``(n.m)^2`` with ``(n.n)(m.m)``: less crosses, equal touches, more misses.

    A vector paired with a multiple of itself counts as intersecting.
    """
    nn, mm = pair(ctx, n, n), pair(ctx, m, m)
    if nn >= 0 or mm >= 0:
        raise GeometryError("classify_pair needs two spacelike vectors")
    if rank([list(n), list(m)]) < 2:
        return INTERSECTING
    nm2 = pair(ctx, n, m) ** 2
    prod = nn * mm
    if nm2 < prod:
        return INTERSECTING
    if nm2 == prod:
        return TANGENT
    return DISJOINT


def _find_null_vector(ctx: GramContext, E, perp_to=(), max_height: int = 4) -> IntVector:
    k = ctx.dim
    for h in range(1, max_height + 1):
        for v in itertools.product(range(-h, h + 1), repeat=k):
            if max(abs(x) for x in v) != h:
                continue
            if pair(ctx, v, v) != 0 or pair(ctx, v, E) == 0:
                continue
            if any(pair(ctx, v, w) != 0 for w in perp_to):
                continue
            return v
    raise GeometryError(f"no auxiliary null vector of height <= {max_height}")


@dataclass(frozen=True)
class BoundaryChart:
    """Euclidean chart of the boundary with ``E`` at infinity and ``F`` at the origin.

    ``frame`` holds k-2 float vectors spanning the orthogonal complement of
    ``{E, F}``, orthonormal for the negated form.  Coordinates of a null
    vector ``P`` are ``scale * P.w_i / P.E``.
    """

    ctx: GramContext
    E: IntVector
    F: IntVector
    frame: tuple[tuple[float, ...], ...]
    scale_sq: Fraction = Fraction(1)
    face: IntVector | None = None

    @property
    def scale(self) -> float:
        return math.sqrt(self.scale_sq)

    @property
    def boundary_dim(self) -> int:
        return self.ctx.dim - 2

    @classmethod
    def build(cls, ctx: GramContext, E=None, F=None, face=None, normalize: str = "none") -> BoundaryChart:
        """Build a chart.

        ``normalize="strip"`` needs ``face``, a ``-2`` wall through ``E``.  The
        chart then puts ``face`` on ``y = 0`` and its parallel partner
        ``E - face`` on ``y = 1`` (last coordinate).
        """
        E = tuple(E) if E is not None else ctx.cusp
        if pair(ctx, E, E) != 0:
            raise GeometryError("E is not a null vector")
        strip = normalize == "strip"
        if normalize not in ("none", "strip"):
            raise GeometryError(f"unknown normalization {normalize!r}")
        if strip:
            if face is None:
                raise GeometryError("strip normalization needs a face wall")
            face = tuple(face)
            if pair(ctx, face, E) != 0 or pair(ctx, face, face) >= 0:
                raise GeometryError("strip face must be a spacelike wall through E")
        if F is None:
            F = _find_null_vector(ctx, E, perp_to=(face,) if strip else ())
        F = tuple(F)
        if pair(ctx, F, F) != 0 or pair(ctx, E, F) == 0:
            raise GeometryError("F must be null with E.F != 0")
        comp = nullspace([ctx.apply_gram(E), ctx.apply_gram(F)], ctx.dim)
        seeds = ([face] if strip else []) + comp
        gram = np.array(ctx.gram, dtype=float)
        frame: list[np.ndarray] = []
        for v in seeds:
            u = np.array(v, dtype=float)
            for w in frame:
                u = u - (-(u @ gram @ w)) * w
            nrm = -(u @ gram @ u)
            if nrm <= 1e-12 * max(1.0, float(np.abs(v).max()) ** 2):
                continue
            frame.append(u / math.sqrt(nrm))
        if len(frame) != ctx.dim - 2:
            raise GeometryError("could not build a frame for the chart")
        scale_sq = Fraction(1)
        if strip:
            frame = frame[1:] + frame[:1]
            partner = tuple(a - b for a, b in zip(E, face))
            # F lies on the face, so its distance to the partner is the strip width
            width_sq = Fraction(pair(ctx, F, partner) ** 2, pair(ctx, F, E) ** 2 * -pair(ctx, partner, partner))
            scale_sq = 1 / width_sq
        return cls(ctx, E, F, tuple(tuple(float(x) for x in w) for w in frame), scale_sq, face if strip else None)

    def _gram_frame(self) -> np.ndarray:
        return np.array(self.frame) @ np.array(self.ctx.gram, dtype=float)

    def chart_point(self, P: Sequence[int]) -> tuple[float, ...]:
        """Chart coordinates of the boundary point represented by null ``P``."""
        if pair(self.ctx, P, P) != 0:
            raise GeometryError(f"{tuple(P)} is not a null vector")
        pe = pair(self.ctx, P, self.E)
        if pe == 0:
            raise GeometryError("the point at infinity has no chart coordinates")
        wf = self._gram_frame()
        p = np.array([float(x) for x in P])
        return tuple(float(x) for x in self.scale * (wf @ p) / float(pe))

    def distance_sq(self, P: Sequence[int], Q: Sequence[int]) -> Fraction:
        """Exact squared chart distance ``scale^2 * 2 P.Q / ((P.E)(Q.E))``."""
        return self.scale_sq * Fraction(2 * pair(self.ctx, P, Q), pair(self.ctx, P, self.E) * pair(self.ctx, Q, self.E))

    def normalized_curvature_sq(self, q: Fraction) -> Fraction:
        return q / self.scale_sq


def sphere_center_vector(ctx: GramContext, E: Sequence[int], n: Sequence[int]) -> IntVector:
    """The null vector ``R_n(E)`` (as a primitive integer vector) marking the centre."""
    nn = pair(ctx, n, n)
    ne = pair(ctx, n, E)
    if ne == 0:
        raise GeometryError("center at infinity: the wall passes through E")
    # nn * R_n(E) = nn E - 2 (n.E) n, an integer vector on the same ray
    P = tuple(nn * e - 2 * ne * x for e, x in zip(E, n))
    if pair(ctx, P, P) != 0:
        raise GeometryError("centre vector is not null")
    P = primitive(P)
    if pair(ctx, P, E) < 0:
        P = tuple(-x for x in P)
    return P


def sphere_center(chart: BoundaryChart, n: Sequence[int]) -> tuple[float, ...]:
    return chart.chart_point(sphere_center_vector(chart.ctx, chart.E, n))


def line_data(chart: BoundaryChart, n: Sequence[int]) -> dict:
    """Point and unit normal of the flat wall ``n`` (which must pass through E)."""
    ctx = chart.ctx
    if pair(ctx, n, chart.E) != 0:
        raise GeometryError("wall does not pass through E")
    jn = np.array(ctx.apply_gram(n), dtype=float)
    beta = -(np.array(chart.frame) @ jn)
    alpha = pair(ctx, n, chart.F) / pair(ctx, chart.E, chart.F)
    # the wall is {x : beta . x = -alpha * scale}
    b2 = float(beta @ beta)
    point = -alpha * chart.scale * beta / b2
    unit = beta / math.sqrt(b2)
    return {"point": tuple(float(x) for x in point), "normal": tuple(float(x) for x in unit)}


@dataclass(frozen=True)
class BoundarySphere:
    normal: IntVector
    curvature_sq: Fraction
    curvature: float
    center: tuple[float, ...] | None
    radius: float | None
    line: dict | None
    word: tuple[int, ...] = ()


def boundary_sphere(chart: BoundaryChart, n: Sequence[int], word: Sequence[int] = ()) -> BoundarySphere:
    ctx = chart.ctx
    normal = canonical_normal(ctx, n, chart.E)
    q = curvature_sq(ctx, chart.E, normal)
    k = math.sqrt(chart.normalized_curvature_sq(q))
    if q == 0:
        return BoundarySphere(normal, q, 0.0, None, None, line_data(chart, normal), tuple(word))
    return BoundarySphere(normal, q, k, sphere_center(chart, normal), 1.0 / k, None, tuple(word))


def descartes_exact(curvature_sqs: Sequence[Fraction], dim: int = 2) -> bool | None:
    """Exact check of ``(sum k)^2 == dim * sum k^2`` for ``k_i = sqrt(q_i) >= 0``.

    Returns ``None`` when the square roots do not share a common surd, in
    which case the identity cannot be decided in rational arithmetic here.
    """
    qs = [Fraction(q) for q in curvature_sqs]
    ref = next((q for q in qs if q != 0), None)
    if ref is None:
        return True
    if not all(is_square(q / ref) for q in qs):
        return None
    r = [exact_sqrt(q / ref) for q in qs]
    return sum(r) ** 2 == dim * sum(x * x for x in r)


def descartes_residual(curvatures: Sequence[float], dim: int = 2) -> float:
    """Relative residual of the Descartes/Soddy-Gosset identity in floats."""
    s = sum(curvatures)
    s2 = sum(k * k for k in curvatures)
    scale = max(s * s, 1.0)
    return abs(s * s - dim * s2) / scale
