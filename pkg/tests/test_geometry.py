import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apollonian_k3.geometry import (
    DISJOINT,
    INTERSECTING,
    TANGENT,
    BoundaryChart,
    GeometryError,
    boundary_sphere,
    classify_pair,
    curvature_sq,
    descartes_exact,
    descartes_residual,
    line_data,
    sphere_center,
    sphere_center_vector,
)
from apollonian_k3.lattice import pair, reflect


@pytest.fixture(scope="module")
def chart(circle):
    return BoundaryChart.build(circle.ctx, face=circle.face, normalize="strip")


@pytest.fixture(scope="module")
def schart(sphere):
    return BoundaryChart.build(sphere.ctx, face=sphere.face, normalize="strip")


def test_curvature_examples(circle):
    ctx, E = circle.ctx, circle.ctx.cusp
    assert curvature_sq(ctx, E, (1, 0, 0, 0)) == 8
    assert curvature_sq(ctx, E, (0, 0, 1, 0)) == 0
    assert curvature_sq(ctx, E, (0, 0, -1, 1)) == 0
    with pytest.raises(GeometryError):
        curvature_sq(ctx, (1, 0, 0, 0), (0, 0, 1, 0))
    with pytest.raises(GeometryError):
        curvature_sq(ctx, E, (1, 1, 0, 0))


def test_strip_normalization(chart):
    # the strip between e3 and e4 - e3 has width 1, so e1 has curvature 2
    assert chart.scale_sq == 2
    s = boundary_sphere(chart, (1, 0, 0, 0))
    assert s.curvature == pytest.approx(2.0, abs=1e-12)
    assert s.radius == pytest.approx(0.5, abs=1e-12)
    assert s.center[1] == pytest.approx(0.5, abs=1e-12)


def test_chart_origin_and_infinity(chart):
    assert chart.chart_point(chart.F) == pytest.approx((0.0, 0.0), abs=1e-12)
    with pytest.raises(GeometryError):
        chart.chart_point(chart.E)
    with pytest.raises(GeometryError):
        chart.chart_point((1, 0, 0, 0))


def test_center_at_infinity(circle, chart):
    with pytest.raises(GeometryError, match="infinity"):
        sphere_center(chart, (0, 0, 1, 0))


def test_radius_from_tangency_point(circle, chart):
    # e1 and e3 are tangent; the tangency point is the null vector e1 + e3
    ctx = circle.ctx
    T = (1, 0, 1, 0)
    assert pair(ctx, T, T) == 0 and pair(ctx, T, (1, 0, 0, 0)) == 0
    c = np.array(sphere_center(chart, (1, 0, 0, 0)))
    t = np.array(chart.chart_point(T))
    assert float(np.linalg.norm(c - t)) == pytest.approx(1 / (2 * math.sqrt(2)) * chart.scale, abs=1e-9)


def _random_null(ctx, E, rng, span=5):
    while True:
        n = tuple(rng.randint(-span, span) for _ in range(ctx.dim))
        if pair(ctx, n, n) < 0 and pair(ctx, n, E) != 0:
            return sphere_center_vector(ctx, E, n)


@pytest.mark.parametrize("which", ["circle", "sphere"])
def test_metric_formula_on_random_null_pairs(which, chart, schart):
    ch = chart if which == "circle" else schart
    rng = random.Random(11)
    for _ in range(200):
        P, Q = _random_null(ch.ctx, ch.E, rng), _random_null(ch.ctx, ch.E, rng)
        d2 = sum((a - b) ** 2 for a, b in zip(ch.chart_point(P), ch.chart_point(Q)))
        exact = float(ch.distance_sq(P, Q))
        assert d2 == pytest.approx(exact, rel=1e-10, abs=1e-14)


def test_classify_examples(circle):
    ctx = circle.ctx
    e1, e2, e3 = (1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0)
    assert classify_pair(ctx, e1, e2) == TANGENT
    assert classify_pair(ctx, e1, e1) == INTERSECTING
    assert classify_pair(ctx, e1, (-2, 0, 0, 0)) == INTERSECTING
    # the two strip lines meet only at infinity
    assert classify_pair(ctx, e3, (0, 0, -1, 1)) == TANGENT
    # e1 and its image under the translation along the strip
    far = reflect(ctx, (1, -1, 0, 0), e1)
    assert classify_pair(ctx, e1, tuple(int(x) for x in far)) in (TANGENT, DISJOINT)
    with pytest.raises(GeometryError):
        classify_pair(ctx, e1, (0, 0, 0, 1))


vec = st.tuples(*[st.integers(-5, 5)] * 4)


@settings(max_examples=200, deadline=None)
@given(n=vec, m=vec, a=st.integers(1, 4), b=st.integers(1, 4))
def test_classify_symmetric_and_scale_invariant(circle, n, m, a, b):
    ctx = circle.ctx
    if pair(ctx, n, n) >= 0 or pair(ctx, m, m) >= 0:
        return
    c = classify_pair(ctx, n, m)
    assert c == classify_pair(ctx, m, n)
    assert c == classify_pair(ctx, tuple(a * x for x in n), tuple(-b * x for x in m))


def _reflect_point(x, line):
    p, u = np.array(line["point"]), np.array(line["normal"])
    return x - 2 * float((x - p) @ u) * u


@pytest.mark.parametrize("which", ["circle", "sphere"])
def test_center_equivariance_for_walls_through_cusp(which, circle, sphere, chart, schart):
    # a wall through the cusp acts on the chart as a Euclidean mirror
    res, ch = (circle, chart) if which == "circle" else (sphere, schart)
    ctx = res.ctx
    walls = [w for w in res.gamma().normals if pair(ctx, w, ch.E) == 0] + [res.face]
    assert walls
    rng = random.Random(5)
    for m in walls:
        line = line_data(ch, m)
        for _ in range(20):
            while True:
                n = tuple(rng.randint(-4, 4) for _ in range(ctx.dim))
                if pair(ctx, n, n) < 0 and pair(ctx, n, ch.E) != 0:
                    break
            img = tuple(int(x * pair(ctx, m, m)) for x in reflect(ctx, m, n))
            got = np.array(sphere_center(ch, img))
            want = _reflect_point(np.array(sphere_center(ch, n)), line)
            assert np.allclose(got, want, atol=1e-9)
            r1 = 1 / math.sqrt(float(curvature_sq(ctx, ch.E, n) / ch.scale_sq))
            r2 = 1 / math.sqrt(float(curvature_sq(ctx, ch.E, img) / ch.scale_sq))
            assert r1 == pytest.approx(r2, rel=1e-12)


def test_line_data(chart):
    low = line_data(chart, (0, 0, 1, 0))
    high = line_data(chart, (0, 0, -1, 1))
    assert np.linalg.norm(low["normal"]) == pytest.approx(1.0)
    gap = abs(float(np.dot(np.subtract(high["point"], low["point"]), low["normal"])))
    assert gap == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(GeometryError):
        line_data(chart, (1, 0, 0, 0))


def test_descartes():
    assert descartes_exact([Fraction(0), Fraction(0), Fraction(8), Fraction(8)])
    assert descartes_exact([Fraction(8), Fraction(8), Fraction(8), Fraction(8) * 9]) is False
    # 2, 2, 3 and 15 (curvatures) satisfy the identity
    assert descartes_exact([4, 4, 9, 225])
    assert descartes_exact([2, 3, 5, 7]) is None
    assert descartes_exact([0, 0, 4, 4, 4], dim=3)
    assert descartes_residual([0, 0, 2, 2]) == 0
    assert descartes_residual([0, 0, 2, 2, 2], dim=3) == 0


def test_chart_build_errors(circle):
    ctx = circle.ctx
    with pytest.raises(GeometryError):
        BoundaryChart.build(ctx, E=(1, 0, 0, 0))
    with pytest.raises(GeometryError):
        BoundaryChart.build(ctx, normalize="strip")
    with pytest.raises(GeometryError):
        BoundaryChart.build(ctx, face=(1, 0, 0, 0), normalize="strip")
    with pytest.raises(GeometryError):
        BoundaryChart.build(ctx, normalize="fancy")
