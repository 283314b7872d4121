import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apollonian_k3.config import builtin_config
from apollonian_k3.lattice import (
    DimensionMismatch,
    GramContext,
    LatticeError,
    NullNormalError,
    all_tangent_gram,
    pair,
    reflect,
    reflect_scaled,
    reflect_scaled_batch,
    reflection_matrix,
    signature,
)
from oracles import rational_signature

CIRCLE = builtin_config("circle").context()
SPHERE = builtin_config("sphere").context()


def test_basis_pairings():
    e1, e3, e4 = CIRCLE.basis("e1"), CIRCLE.basis("e3"), CIRCLE.basis("e4")
    assert pair(CIRCLE, e1, e1) == -2
    assert pair(CIRCLE, e1, e4) == 4
    assert pair(CIRCLE, e3, e4) == 0
    assert pair(CIRCLE, (0, 0, 2, -1), (0, 0, 2, -1)) == -8
    assert pair(SPHERE, (1, 1, 1, 3, -2), (1, 1, 1, 3, -2)) == -24


def test_pair_is_symmetric_and_exact():
    u, v = (3, -1, 2, 7), (0, 5, -4, 1)
    assert pair(CIRCLE, u, v) == pair(CIRCLE, v, u)
    assert isinstance(pair(CIRCLE, u, v), int)
    half = (Fraction(1, 2), 0, 0, 0)
    assert pair(CIRCLE, half, half) == Fraction(-1, 2)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        pair(CIRCLE, (1, 0, 0), (1, 0, 0, 0))


def test_reflect_examples():
    n2 = (0, 0, 2, -1)
    assert reflect(CIRCLE, n2, n2) == tuple(-x for x in n2)
    assert reflect(CIRCLE, n2, (0, 0, 0, 1)) == (0, 0, 0, 1)
    with pytest.raises(NullNormalError):
        reflect(CIRCLE, (0, 0, 0, 1), (1, 0, 0, 0))


def test_integrality():
    assert reflection_matrix(CIRCLE, (0, 0, 2, -1)).integral
    assert not reflection_matrix(CIRCLE, (2, -2, 0, 1)).integral
    with pytest.raises(LatticeError):
        reflection_matrix(CIRCLE, (2, -2, 0, 1)).as_int()


@pytest.mark.parametrize("ctx", [CIRCLE, SPHERE, GramContext(all_tangent_gram(6))])
def test_minus_two_reflections_are_integral(ctx):
    k = ctx.dim
    for i in range(k):
        v = tuple(int(j == i) for j in range(k))
        if pair(ctx, v, v) == -2:
            assert reflection_matrix(ctx, v).integral


@pytest.mark.parametrize(
    "gram, expected",
    [
        (CIRCLE.gram, (1, 3, 0)),
        (SPHERE.gram, (1, 4, 0)),
        (all_tangent_gram(10), (1, 9, 0)),
        (((0, 1), (1, 0)), (1, 1, 0)),
        (((1, 0), (0, 0)), (1, 0, 1)),
    ],
)
def test_signature(gram, expected):
    assert signature(gram) == expected


@pytest.mark.parametrize("gram", [CIRCLE.gram, SPHERE.gram, all_tangent_gram(5), all_tangent_gram(10)])
def test_signature_matches_minor_oracle(gram):
    assert signature(gram) == rational_signature(gram)


def test_context_validation():
    with pytest.raises(LatticeError):
        GramContext(((1, 2), (3, 1)))
    with pytest.raises(LatticeError):
        GramContext(((1, 0), (0, -2)))
    with pytest.raises(LatticeError):
        GramContext(((-2, 0), (0, -2)))
    with pytest.raises(LatticeError):
        GramContext(CIRCLE.gram, cusp_index=0)
    assert CIRCLE.cusp == (0, 0, 0, 1)


vec4 = st.tuples(*[st.integers(-6, 6)] * 4)


@settings(max_examples=300, deadline=None)
@given(n=vec4, x=vec4, y=vec4)
def test_reflection_is_an_involutive_isometry(n, x, y):
    if pair(CIRCLE, n, n) == 0:
        return
    rx, ry = reflect(CIRCLE, n, x), reflect(CIRCLE, n, y)
    assert reflect(CIRCLE, n, rx) == tuple(Fraction(v) for v in x)
    assert pair(CIRCLE, rx, ry) == pair(CIRCLE, x, y)


@settings(max_examples=100, deadline=None)
@given(n=st.tuples(*[st.integers(-4, 4)] * 5))
def test_reflection_matrix_preserves_form(n):
    if pair(SPHERE, n, n) == 0:
        return
    m = reflection_matrix(SPHERE, n)
    assert m.preserves(SPHERE)
    assert (m @ m).is_identity()
    # the divisibility test is stated for the primitive vector on the ray
    g = math.gcd(*n)
    p = tuple(x // g for x in n)
    jn = SPHERE.apply_gram(p)
    nn = pair(SPHERE, p, p)
    assert m.integral == all((2 * t) % nn == 0 for t in jn)


def test_scaled_reflection_agrees_with_fractions():
    rng = np.random.default_rng(3)
    N = rng.integers(-6, 7, size=(200, 5))
    X = rng.integers(-6, 7, size=(200, 5))
    keep = [i for i in range(200) if pair(SPHERE, tuple(map(int, N[i])), tuple(map(int, N[i]))) != 0]
    N, X = N[keep], X[keep]
    num, nn = reflect_scaled_batch(SPHERE, N, X)
    for i in range(len(N)):
        n, x = tuple(map(int, N[i])), tuple(map(int, X[i]))
        single, d = reflect_scaled(SPHERE, n, x)
        assert d == nn[i] and single == tuple(int(v) for v in num[i])
        # a Fraction entry forces the generic path
        assert reflect(SPHERE, n, (Fraction(x[0]),) + x[1:]) == tuple(Fraction(v, d) for v in single)


def test_scaled_batch_switches_to_python_ints():
    big = 10**7
    N = np.array([[big, 0, 0, 0, 1]], dtype=object)
    X = np.array([[big, big, big, big, big]], dtype=object)
    num, nn = reflect_scaled_batch(SPHERE, N, X)
    single, d = reflect_scaled(SPHERE, (big, 0, 0, 0, 1), (big,) * 5)
    assert nn[0] == d and tuple(num[0]) == single
    with pytest.raises(NullNormalError):
        reflect_scaled_batch(CIRCLE, [[0, 0, 0, 1]], [[1, 0, 0, 0]])
