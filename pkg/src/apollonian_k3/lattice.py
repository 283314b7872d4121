"""Integer lattices with a Lorentzian Gram matrix.

Vectors are integer coordinate tuples in the basis ``e_1, ..., e_k``; the
Gram matrix carries all of the geometry.  Pairings, reflections and the
inertia computation are exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exact import IntVector, identity, matmul


class LatticeError(ValueError):
    pass


class DimensionMismatch(LatticeError):
    pass


class NullNormalError(LatticeError):
    """Raised when a reflection is requested through a null vector."""


@dataclass(frozen=True)
class GramContext:
    """An even Lorentzian lattice ``Z^k`` with Gram matrix ``gram``.

    ``cusp_index`` is the 0-based index of the null basis vector used as
    the point at infinity (``None`` when the case has no designated cusp).
    """

    gram: tuple[tuple[int, ...], ...]
    cusp_index: int | None = None
    labels: tuple[str, ...] = ()
    name: str = ""
    _check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        g = tuple(tuple(int(x) for x in row) for row in self.gram)
        object.__setattr__(self, "gram", g)
        k = len(g)
        if k == 0 or any(len(row) != k for row in g):
            raise LatticeError("Gram matrix must be square and non-empty")
        if any(g[i][j] != g[j][i] for i in range(k) for j in range(i)):
            raise LatticeError("Gram matrix is not symmetric")
        if any(g[i][i] % 2 for i in range(k)):
            raise LatticeError("lattice is not even (odd diagonal entry)")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"e{i + 1}" for i in range(k)))
        if len(self.labels) != k:
            raise LatticeError("one label per basis vector is required")
        if self.cusp_index is not None:
            if not 0 <= self.cusp_index < k:
                raise LatticeError("cusp index out of range")
            if g[self.cusp_index][self.cusp_index] != 0:
                raise LatticeError("cusp basis vector is not null")
        if self._check:
            sig = signature(self)
            if sig != (1, k - 1, 0):
                raise LatticeError(f"Gram matrix has signature {sig}, expected (1, {k - 1}, 0)")

    @property
    def dim(self) -> int:
        return len(self.gram)

    @property
    def cusp(self) -> IntVector:
        if self.cusp_index is None:
            raise LatticeError(f"lattice {self.name!r} has no designated cusp")
        return basis_vector(self.dim, self.cusp_index)

    def basis(self, label: str) -> IntVector:
        return basis_vector(self.dim, self.labels.index(label))

    def apply_gram(self, v: Sequence[int]) -> IntVector:
        return tuple(sum(a * b for a, b in zip(row, v)) for row in self.gram)


def basis_vector(k: int, i: int) -> IntVector:
    return tuple(int(j == i) for j in range(k))


def _check_dim(ctx: GramContext, *vs: Sequence) -> None:
    for v in vs:
        if len(v) != ctx.dim:
            raise DimensionMismatch(f"vector of length {len(v)} in a rank {ctx.dim} lattice")


def pair(ctx: GramContext, u: Sequence, v: Sequence):
    """Bilinear pairing ``u^T J v`` (exact; ints stay ints)."""
    _check_dim(ctx, u, v)
    return sum(ui * gv for ui, gv in zip(u, ctx.apply_gram(v)))


def reflect_scaled(ctx: GramContext, n: Sequence[int], x: Sequence[int]) -> tuple[tuple[int, ...], int]:
    """Integer form of the reflection: ``(nn * R_n(x), nn)`` with ``nn = n.n``.

    Everything stays in machine-free integer arithmetic, so this is the fast
    exact path for integer ``n`` and ``x``.
    """
    _check_dim(ctx, n, x)
    jn = ctx.apply_gram(n)
    nn = sum(a * b for a, b in zip(n, jn))
    if nn == 0:
        raise NullNormalError(f"cannot reflect in null vector {tuple(n)}")
    t2 = 2 * sum(a * b for a, b in zip(x, jn))
    return tuple(nn * xi - t2 * ni for xi, ni in zip(x, n)), nn


def reflect_scaled_batch(ctx: GramContext, N, X) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise ``reflect_scaled`` for integer arrays ``N`` and ``X`` of equal shape.

    Uses int64 when a crude magnitude bound allows it and Python integers
    (object arrays) otherwise, so the result is exact either way.
    """
    N = np.asarray(N)
    X = np.asarray(X)
    if N.shape != X.shape or N.ndim != 2 or N.shape[1] != ctx.dim:
        raise DimensionMismatch(f"expected two (rows, {ctx.dim}) arrays, got {N.shape} and {X.shape}")
    J = np.array(ctx.gram, dtype=np.int64)
    k = ctx.dim
    a = int(np.abs(N).max(initial=0))
    b = int(np.abs(X).max(initial=0))
    g = int(np.abs(J).max(initial=0))
    # |nn * x| and |2 (n.x) n| are each below k^2 g a^2 b
    dtype = np.int64 if 4 * k * k * g * a * a * b < 2**62 else object
    N = N.astype(dtype)
    X = X.astype(dtype)
    JN = N @ J.astype(dtype)
    nn = (N * JN).sum(axis=1)
    if (nn == 0).any():
        bad = N[int(np.flatnonzero(nn == 0)[0])]
        raise NullNormalError(f"cannot reflect in null vector {tuple(int(v) for v in bad)}")
    t2 = 2 * (X * JN).sum(axis=1)
    return nn[:, None] * X - t2[:, None] * N, nn


def reflect(ctx: GramContext, n: Sequence[int], x: Sequence) -> tuple[Fraction, ...]:
    """Reflection of ``x`` in the wall ``n . y = 0``."""
    _check_dim(ctx, n, x)
    if all(isinstance(v, int) for v in x) and all(isinstance(v, int) for v in n):
        num, den = reflect_scaled(ctx, n, x)
        return tuple(Fraction(v, den) for v in num)
    nn = pair(ctx, n, n)
    if nn == 0:
        raise NullNormalError(f"cannot reflect in null vector {tuple(n)}")
    c = Fraction(2 * pair(ctx, n, x), nn)
    return tuple(Fraction(xi) - c * ni for xi, ni in zip(x, n))


@dataclass(frozen=True)
class IsometryMatrix:
    """Exact rational matrix acting on coordinate columns."""

    entries: tuple[tuple[Fraction, ...], ...]
    integral: bool
    source_normal: IntVector | None = None

    @classmethod
    def from_rows(cls, rows, source_normal=None) -> IsometryMatrix:
        entries = tuple(tuple(Fraction(x) for x in row) for row in rows)
        integral = all(x.denominator == 1 for row in entries for x in row)
        return cls(entries, integral, source_normal)

    def as_int(self) -> tuple[tuple[int, ...], ...]:
        if not self.integral:
            raise LatticeError("matrix has non-integer entries")
        return tuple(tuple(int(x) for x in row) for row in self.entries)

    def apply(self, x: Sequence) -> tuple:
        out = tuple(sum(a * b for a, b in zip(row, x)) for row in self.entries)
        if self.integral and all(isinstance(v, int) for v in x):
            return tuple(int(v) for v in out)
        return out

    def __matmul__(self, other: IsometryMatrix) -> IsometryMatrix:
        return IsometryMatrix.from_rows(matmul(self.entries, other.entries))

    def is_identity(self) -> bool:
        n = len(self.entries)
        return all(self.entries[i][j] == (i == j) for i in range(n) for j in range(n))

    def preserves(self, ctx: GramContext) -> bool:
        """True when ``M^T J M == J`` exactly."""
        m = self.entries
        mt = tuple(zip(*m))
        return matmul(matmul(mt, ctx.gram), m) == [list(r) for r in ctx.gram]


def reflection_matrix(ctx: GramContext, n: Sequence[int]) -> IsometryMatrix:
    """Matrix of the reflection in ``n``; column ``i`` is ``reflect(n, e_i)``.

    The reflection is integral iff ``n.n`` divides ``2 n.e_i`` for every i.
    """
    _check_dim(ctx, n)
    n = tuple(int(x) for x in n)
    nn = pair(ctx, n, n)
    if nn == 0:
        raise NullNormalError(f"cannot reflect in null vector {n}")
    jn = ctx.apply_gram(n)
    k = ctx.dim
    rows = [[Fraction(int(i == j)) - Fraction(2 * jn[j] * n[i], nn) for j in range(k)] for i in range(k)]
    return IsometryMatrix.from_rows(rows, source_normal=n)


def signature(ctx_or_gram) -> tuple[int, int, int]:
    """Exact inertia ``(positive, negative, zero)`` by congruence diagonalization."""
    gram = ctx_or_gram.gram if isinstance(ctx_or_gram, GramContext) else ctx_or_gram
    a = [[Fraction(x) for x in row] for row in gram]
    n = len(a)
    diag: list[Fraction] = []
    size = n
    while size:
        piv = next((i for i in range(size) if a[i][i] != 0), None)
        if piv is None:
            off = next(((i, j) for i in range(size) for j in range(i + 1, size) if a[i][j] != 0), None)
            if off is None:
                diag.extend([Fraction(0)] * size)
                break
            i, j = off
            # x_i <- x_i + x_j makes a[i][i] = 2 a[i][j] != 0
            for r in range(size):
                a[i][r] += a[j][r]
            for r in range(size):
                a[r][i] += a[r][j]
            piv = i
        # move the pivot to the end and eliminate its row and column
        last = size - 1
        a[piv], a[last] = a[last], a[piv]
        for row in a:
            row[piv], row[last] = row[last], row[piv]
        p = a[last][last]
        for i in range(last):
            f = a[i][last] / p
            if f:
                for j in range(last):
                    a[i][j] -= f * a[last][j]
        diag.append(p)
        for row in a:
            row.pop()
        a.pop()
        size -= 1
    pos = sum(1 for d in diag if d > 0)
    neg = sum(1 for d in diag if d < 0)
    return pos, neg, n - pos - neg


def all_tangent_gram(size: int) -> tuple[tuple[int, ...], ...]:
    """``-2`` on the diagonal and ``2`` elsewhere (pairwise tangent spheres)."""
    return tuple(tuple(-2 if i == j else 2 for j in range(size)) for i in range(size))


def is_primitive(v: Sequence[int]) -> bool:
    return math.gcd(*v) == 1


def lattice_identity(ctx: GramContext) -> IsometryMatrix:
    return IsometryMatrix.from_rows(identity(ctx.dim))
