"""Reflection groups on the lattice: wall normals, generator checks, orbits.

The orbit enumerator walks the Schreier graph of a set of integral
reflections acting on spacelike vectors.  Vectors are deduplicated by a
canonical form (primitive, sign fixed against the cusp).  When the cusp
stabilizer contains translations the enumeration can run modulo them,
which keeps curvature-bounded orbits finite.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exact import IntVector, integer_row_basis, inverse, nullspace, primitive, rank
from .geometry import canonical_normal
from .lattice import (
    GramContext,
    IsometryMatrix,
    NullNormalError,
    all_tangent_gram,
    pair,
    reflection_matrix,
)


class GroupError(ValueError):
    pass


class ConstraintError(GroupError):
    pass


class OrbitBudgetExceeded(GroupError):
    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


# --------------------------------------------------------------------------
# wall normals from pairing constraints


@dataclass(frozen=True)
class ConstraintSystem:
    """Homogeneous conditions ``n . v = 0`` for each constraint vector ``v``."""

    ctx: GramContext
    constraints: tuple[tuple[IntVector, int], ...]
    norm_target: int | None = None

    @classmethod
    def perpendicular(cls, ctx, vectors, norm_target=None) -> ConstraintSystem:
        return cls(ctx, tuple((tuple(v), 0) for v in vectors), norm_target)

    def __post_init__(self):
        for v, target in self.constraints:
            if len(v) != self.ctx.dim:
                raise ConstraintError("constraint vector has the wrong dimension")
            if target != 0:
                raise ConstraintError("only homogeneous constraints (pairing 0) are supported")

    def solution_basis(self) -> list[IntVector]:
        rows = [self.ctx.apply_gram(v) for v, _ in self.constraints]
        return nullspace(rows, self.ctx.dim)


def _canon(ctx: GramContext, v) -> IntVector:
    E = ctx.cusp if ctx.cusp_index is not None else None
    return canonical_normal(ctx, v, E)


def solve_normal(sys: ConstraintSystem) -> list[IntVector]:
    """Primitive integer solutions spanning the solution space, sign-canonical."""
    basis = sys.solution_basis()
    if not basis:
        raise ConstraintError("the constraints only admit the zero vector")
    out = [_canon(sys.ctx, v) for v in basis]
    if sys.norm_target is not None:
        scaled = []
        for v in out:
            nn = pair(sys.ctx, v, v)
            if nn == 0 or sys.norm_target % nn:
                continue
            lam = math.isqrt(sys.norm_target // nn) if sys.norm_target // nn > 0 else 0
            if lam and lam * lam * nn == sys.norm_target:
                scaled.append(tuple(lam * x for x in v))
        if not scaled:
            raise ConstraintError(f"no solution with self-pairing {sys.norm_target}")
        out = scaled
    return out


def null_point(sys: ConstraintSystem, max_height: int = 6) -> list[IntVector]:
    """Primitive integer null vectors satisfying the linear constraints.

    A two-dimensional solution space is handled exactly through its binary
    quadratic form; a larger one falls back to a bounded search over
    coefficient height ``max_height`` in the solution basis.
    """
    ctx = sys.ctx
    basis = sys.solution_basis()
    if not basis:
        raise ConstraintError("the constraints only admit the zero vector")
    sols: set[IntVector] = set()
    if len(basis) == 1:
        if pair(ctx, basis[0], basis[0]) == 0:
            sols.add(basis[0])
    elif len(basis) == 2:
        u, w = basis
        a, b, c = pair(ctx, u, u), 2 * pair(ctx, u, w), pair(ctx, w, w)
        # a s^2 + b s t + c t^2 = 0
        if a == 0:
            sols.add(u)
        if c == 0:
            sols.add(w)
        disc = b * b - 4 * a * c
        if disc >= 0 and math.isqrt(disc) ** 2 == disc:
            r = math.isqrt(disc)
            if a != 0:
                for sgn in (1, -1):  # s/t = (-b +- r) / 2a
                    s, t = -b + sgn * r, 2 * a
                    sols.add(primitive([s * x + t * y for x, y in zip(u, w)]))
            elif b != 0:  # t (b s + c t) = 0
                sols.add(primitive([-c * x + b * y for x, y in zip(u, w)]))
    else:
        rng = range(-max_height, max_height + 1)
        for coef in itertools.product(rng, repeat=len(basis)):
            if not any(coef):
                continue
            v = [sum(c * b[i] for c, b in zip(coef, basis)) for i in range(ctx.dim)]
            if pair(ctx, v, v) == 0:
                sols.add(primitive(v))
    out = sorted({_canon(ctx, v) for v in sols if any(v)}, key=lambda v: (max(map(abs, v)), v))
    if not out:
        raise ConstraintError("no rational null point satisfies the constraints")
    return out


# --------------------------------------------------------------------------
# generator sets


WALL = "wall"
FACE = "face"


@dataclass(frozen=True)
class GeneratorSet:
    ctx: GramContext
    names: tuple[str, ...]
    normals: tuple[IntVector, ...]
    roles: tuple[str, ...]
    matrices: tuple[IsometryMatrix | None, ...] = field(repr=False)

    @classmethod
    def from_normals(cls, ctx, normals, names=None, roles=None) -> GeneratorSet:
        normals = tuple(tuple(int(x) for x in n) for n in normals)
        names = tuple(names) if names is not None else tuple(f"r{i + 1}" for i in range(len(normals)))
        roles = tuple(roles) if roles is not None else (WALL,) * len(normals)
        mats = []
        for n in normals:
            try:
                mats.append(reflection_matrix(ctx, n))
            except NullNormalError:
                mats.append(None)
        return cls(ctx, names, normals, roles, tuple(mats))

    def __len__(self):
        return len(self.normals)

    def subset(self, role: str) -> GeneratorSet:
        idx = [i for i, r in enumerate(self.roles) if r == role]
        return GeneratorSet(
            self.ctx,
            tuple(self.names[i] for i in idx),
            tuple(self.normals[i] for i in idx),
            tuple(self.roles[i] for i in idx),
            tuple(self.matrices[i] for i in idx),
        )

    def int_matrices(self) -> tuple[tuple[tuple[int, ...], ...], ...]:
        out = []
        for name, m in zip(self.names, self.matrices):
            if m is None or not m.integral:
                raise GroupError(f"generator {name} is not an integral reflection")
            out.append(m.as_int())
        return tuple(out)


@dataclass
class GeneratorCheck:
    name: str
    normal: IntVector
    role: str
    self_pairing: int
    integral: bool
    preserves_form: bool
    note: str = ""


@dataclass
class GeneratorReport:
    checks: list[GeneratorCheck]
    pairing_table: list[list[int]]

    @property
    def ok(self) -> bool:
        return all(c.integral and c.preserves_form for c in self.checks)

    def failures(self) -> list[GeneratorCheck]:
        return [c for c in self.checks if not (c.integral and c.preserves_form)]


def validate_generators(gs: GeneratorSet) -> GeneratorReport:
    ctx = gs.ctx
    checks = []
    for name, n, role, m in zip(gs.names, gs.normals, gs.roles, gs.matrices):
        nn = pair(ctx, n, n)
        if m is None:
            checks.append(GeneratorCheck(name, n, role, nn, False, False, "null vector: no reflection"))
            continue
        note = "" if m.integral else "reflection has non-integer entries"
        checks.append(GeneratorCheck(name, n, role, nn, m.integral, m.preserves(ctx), note))
    table = [[pair(ctx, a, b) for b in gs.normals] for a in gs.normals]
    return GeneratorReport(checks, table)


def orient_walls(ctx: GramContext, normals: Sequence[Sequence[int]], face: Sequence[int]) -> list[IntVector]:
    """Flip signs so the face and walls have pairwise nonnegative pairings.

    These are inward normals of an acute-angled polyhedron (with the sign
    convention where walls have negative square).  The face keeps its sign.
    """
    vecs = [tuple(face)] + [tuple(n) for n in normals]
    signs: list[int | None] = [1] + [None] * len(normals)
    changed = True
    while changed:
        changed = False
        for i, v in enumerate(vecs):
            if signs[i] is not None:
                continue
            for j, w in enumerate(vecs):
                if signs[j] is None:
                    continue
                p = pair(ctx, v, w) * signs[j]
                if p != 0:
                    signs[i] = 1 if p > 0 else -1
                    changed = True
                    break
    for i, s in enumerate(signs):
        if s is None:
            signs[i] = 1
    out = [tuple(s * x for x in v) for s, v in zip(signs, vecs)]
    for i, j in itertools.combinations(range(len(out)), 2):
        if pair(ctx, out[i], out[j]) < 0:
            raise GroupError("walls cannot be oriented as an acute-angled chamber")
    return out[1:]


def find_wall_candidates(ctx: GramContext, max_height: int = 8, norms=(-2, -8, -24, -32)) -> list[IntVector]:
    """All canonical primitive vectors up to ``max_height`` with the given norms
    whose reflections are integral."""
    k = ctx.dim
    rng = np.arange(-max_height, max_height + 1, dtype=np.int64)
    grid = np.stack(np.meshgrid(*([rng] * k), indexing="ij"), axis=-1).reshape(-1, k)
    gram = np.array(ctx.gram, dtype=np.int64)
    jv = grid @ gram
    nn = np.einsum("ij,ij->i", grid, jv)
    mask = np.isin(nn, norms)
    grid, jv, nn = grid[mask], jv[mask], nn[mask]
    mask = np.all((2 * jv) % nn[:, None] == 0, axis=1) & (np.gcd.reduce(grid, axis=1) == 1)
    out = {_canon(ctx, tuple(int(x) for x in v)) for v in grid[mask]}
    return sorted(out, key=lambda v: (max(map(abs, v)), v))


def higher_dim_membership(m: int) -> bool:
    """Is the reflection in ``[1, ..., 1, 1 - m]`` integral for ``J_{m+2}``?"""
    if m < 2:
        raise GroupError("m must be at least 2")
    ctx = GramContext(all_tangent_gram(m + 2), name=f"J{m + 2}")
    n = (1,) * (m + 1) + (1 - m,)
    return reflection_matrix(ctx, n).integral


# --------------------------------------------------------------------------
# translations fixing the cusp


def _mat_mul(a, b):
    bt = list(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a)


def _mat_vec(a, v):
    return tuple(sum(x * y for x, y in zip(row, v)) for row in a)


def _unipotent_power(N, N2, k, v):
    """``(I + N)^k v`` for ``N^3 = 0``."""
    nv = _mat_vec(N, v)
    n2v = _mat_vec(N2, v)
    c2 = k * (k - 1) // 2
    return tuple(a + k * b + c2 * c for a, b, c in zip(v, nv, n2v))


@dataclass(frozen=True)
class CuspTranslations:
    """A lattice of parabolic translations fixing the cusp ``E``.

    ``functionals`` are vectors ``w`` orthogonal to ``E``; for a null ``P`` the
    ratios ``P.w / P.E`` are affine chart coordinates, and the translation
    ``T_j`` shifts them by ``shifts[j]``.
    """

    gram: tuple[tuple[int, ...], ...]
    E: IntVector
    functionals: tuple[IntVector, ...]
    matrices: tuple[tuple[tuple[int, ...], ...], ...]
    nilpotents: tuple[tuple, ...]  # (N, N^2) per basis translation
    words: tuple[tuple[int, ...], ...]
    shifts: tuple[tuple[Fraction, ...], ...]
    dual_num: tuple[tuple[int, ...], ...]
    dual_den: tuple[int, ...]

    @property
    def rank(self) -> int:
        return len(self.matrices)

    def coords(self, v: Sequence[int]) -> tuple[Fraction, ...]:
        """Chart coordinates ``v.w / v.E`` of the centre of the wall ``v``."""
        jv = _mat_vec(self.gram, v)
        s = sum(a * b for a, b in zip(self.E, jv))
        return tuple(Fraction(sum(a * b for a, b in zip(w, jv)), s) for w in self.functionals)

    def apply(self, ks: Sequence[int], v: Sequence[int]) -> IntVector:
        out = tuple(v)
        for (N, N2), k in zip(self.nilpotents, ks):
            if k:
                out = _unipotent_power(N, N2, k, out)
        return out

    def word(self, ks: Sequence[int]) -> tuple[int, ...]:
        out: list[int] = []
        for w, k in zip(self.words, ks):
            if k > 0:
                out.extend(w * k)
            elif k < 0:
                out.extend(tuple(reversed(w)) * (-k))
        return tuple(out)

    def reduce(self, v: IntVector) -> tuple[IntVector, tuple[int, ...]]:
        """Translate ``v`` (with ``v.E > 0``) into the fundamental cell.

        Returns the translated vector and the exponents that were applied.
        """
        jv = _mat_vec(self.gram, v)
        s = sum(a * b for a, b in zip(self.E, jv))
        p = [sum(a * b for a, b in zip(w, jv)) for w in self.functionals]
        ks = tuple(
            -(sum(a * b for a, b in zip(row, p)) // (den * s)) for row, den in zip(self.dual_num, self.dual_den)
        )
        if not any(ks):
            return v, ks
        return self.apply(ks, v), ks

    def invariant(self, v: Sequence[int]) -> bool:
        return all(_mat_vec(m, v) == tuple(v) for m in self.matrices)

    def translates_within(self, P: Sequence[int], v: Sequence[int], bound: int) -> list[tuple[int, ...]]:
        """All exponent vectors ``k`` with ``|P . T^k v| <= bound``.

        ``P.T^k v`` is a quadratic polynomial in ``k``; its quadratic part is
        definite unless ``v`` is fixed by every translation.
        """
        d = self.rank
        jp = _mat_vec(self.gram, P)

        def q(ks):
            return sum(a * b for a, b in zip(jp, self.apply(ks, v)))

        unit = [tuple(int(i == j) for j in range(d)) for i in range(d)]
        c0 = q((0,) * d)
        qp = [q(u) for u in unit]
        qm = [q(tuple(-x for x in u)) for u in unit]
        lin = [Fraction(a - b, 2) for a, b in zip(qp, qm)]
        quad = [[Fraction(0)] * d for _ in range(d)]
        for i in range(d):
            quad[i][i] = Fraction(qp[i] + qm[i], 2) - c0
        for i, j in itertools.combinations(range(d), 2):
            ks = tuple(int(t in (i, j)) for t in range(d))
            cross = q(ks) - c0 - lin[i] - lin[j] - quad[i][i] - quad[j][j]
            quad[i][j] = quad[j][i] = cross / 2
        if all(x == 0 for row in quad for x in row):
            if any(lin) or not self.invariant(v):
                raise GroupError("translates of a wall through the cusp are unbounded")
            return [(0,) * d] if abs(c0) <= bound else []
        sign = 1 if quad[0][0] > 0 else -1
        A = np.array([[float(sign * x) for x in row] for row in quad])
        if np.any(np.linalg.eigvalsh(A) <= 0):
            raise GroupError("translation quadratic form is not definite")
        b = np.array([float(sign * x) for x in lin])
        centre = -0.5 * np.linalg.solve(A, b)
        qmin = float(sign * c0) + 0.5 * float(b @ centre)
        slack = bound - qmin
        if slack < -1e-9 * max(1.0, abs(bound)):
            return []
        ainv = np.linalg.inv(A)
        half = np.sqrt(max(slack, 0.0) * np.diag(ainv)) + 1.0
        ranges = [range(math.floor(c - h), math.ceil(c + h) + 1) for c, h in zip(centre, half)]
        out = []
        for ks in itertools.product(*ranges):
            val = c0 + sum(l * k for l, k in zip(lin, ks)) + sum(
                quad[i][j] * ks[i] * ks[j] for i in range(d) for j in range(d)
            )
            if abs(val) <= bound:
                out.append(tuple(ks))
        return out

    @classmethod
    def discover(cls, ctx: GramContext, gens, E=None, max_word: int = 8, max_group: int = 20000):
        """Find the translation lattice of the subgroup generated by the
        generators that fix ``E``.  Returns ``None`` if there are no translations.
        """
        E = tuple(E) if E is not None else ctx.cusp
        k = ctx.dim
        cusp_gens = [i for i, g in enumerate(gens) if _mat_vec(g, E) == E]
        if not cusp_gens:
            return None
        je = ctx.apply_gram(E)
        perp = nullspace([je], k)
        functionals: list[IntVector] = []
        for w in perp:
            if rank([list(x) for x in functionals] + [list(w), list(E)]) > len(functionals) + 1:
                functionals.append(w)
        ci = next(i for i, x in enumerate(E) if x)

        def shift(m):
            out = []
            for w in functionals:
                d = [a - b for a, b in zip(_mat_vec(m, w), w)]
                c = Fraction(d[ci], E[ci])
                if any(Fraction(x) != c * e for x, e in zip(d, E)):
                    return None
                out.append(-c)
            return tuple(out)

        ident = tuple(tuple(int(i == j) for j in range(k)) for i in range(k))
        seen = {ident: ()}
        frontier = [ident]
        found: dict[tuple, tuple] = {}
        for _ in range(max_word):
            nxt = []
            for m in frontier:
                for g in cusp_gens:
                    mm = _mat_mul(gens[g], m)
                    if mm in seen:
                        continue
                    seen[mm] = seen[m] + (g,)
                    nxt.append(mm)
                    s = shift(mm)
                    if s is not None and any(s) and s not in found:
                        found[s] = (mm, seen[mm])
            frontier = nxt
            if len(seen) > max_group:
                break
        if not found:
            return None
        items = sorted(found.items(), key=lambda kv: (len(kv[1][1]), kv[1][1]))
        chosen: list = []
        for item in items:
            if not chosen or not _in_lattice(item[0], _lattice_basis([s for s, _ in chosen])):
                chosen.append(item)
        return cls._from_translations(ctx, E, functionals, chosen, gens, cusp_gens)

    @classmethod
    def _from_translations(cls, ctx, E, functionals, items, gens, cusp_gens):
        k = ctx.dim
        ident = tuple(tuple(int(i == j) for j in range(k)) for i in range(k))
        while True:
            shifts = [s for s, _ in items]
            den = 1
            for s in shifts:
                for x in s:
                    den = den * x.denominator // math.gcd(den, x.denominator)
            rows = [[int(x * den) for x in s] for s in shifts]
            basis_rows, transform = integer_row_basis(rows)
            mats, words, nil = [], [], []
            for u in transform:
                m, w = ident, ()
                for coef, (_, (mi, wi)) in zip(u, items):
                    if coef == 0:
                        continue
                    N = tuple(tuple(a - b for a, b in zip(r1, r2)) for r1, r2 in zip(mi, ident))
                    N2 = _mat_mul(N, N)
                    p = tuple(
                        tuple(i_ + coef * n1 + (coef * (coef - 1) // 2) * n2 for i_, n1, n2 in zip(ri, r1, r2))
                        for ri, r1, r2 in zip(ident, N, N2)
                    )
                    m = _mat_mul(p, m)
                    w = w + (wi * coef if coef > 0 else tuple(reversed(wi)) * (-coef))
                mats.append(m)
                words.append(w)
            basis_shifts = [tuple(Fraction(x, den) for x in r) for r in basis_rows]
            # close the lattice under conjugation by the cusp generators
            extra = []
            for g in cusp_gens:
                for m, w in zip(mats, words):
                    conj = _mat_mul(_mat_mul(gens[g], m), gens[g])
                    s = _shift_of(conj, functionals, E)
                    if not _in_lattice(s, basis_shifts):
                        extra.append((s, (conj, (g,) + w + (g,))))
            if not extra:
                break
            items = items + extra
        for m in mats:
            N = tuple(tuple(a - b for a, b in zip(r1, r2)) for r1, r2 in zip(m, ident))
            N2 = _mat_mul(N, N)
            if any(any(r) for r in _mat_mul(N2, N)):
                raise GroupError("translation is not unipotent of order 3")
            nil.append((N, N2))
        # dual basis: coefficients c with t = sum_j c_j shift_j (least squares, exact)
        S = [list(s) for s in basis_shifts]
        G = [[sum(a * b for a, b in zip(si, sj)) for sj in S] for si in S]
        Ginv = inverse(G)
        A = [[sum(Ginv[i][j] * S[j][c] for j in range(len(S))) for c in range(len(functionals))] for i in range(len(S))]
        dual_num, dual_den = [], []
        for row in A:
            d = 1
            for x in row:
                d = d * x.denominator // math.gcd(d, x.denominator)
            dual_num.append(tuple(int(x * d) for x in row))
            dual_den.append(d)
        return cls(
            tuple(tuple(r) for r in ctx.gram),
            E,
            tuple(functionals),
            tuple(mats),
            tuple(nil),
            tuple(words),
            tuple(basis_shifts),
            tuple(dual_num),
            tuple(dual_den),
        )


def _shift_of(m, functionals, E):
    ci = next(i for i, x in enumerate(E) if x)
    out = []
    for w in functionals:
        d = [a - b for a, b in zip(_mat_vec(m, w), w)]
        out.append(-Fraction(d[ci], E[ci]))
    return tuple(out)


def _in_lattice(s, basis) -> bool:
    if not any(s):
        return True
    S = [list(b) for b in basis]
    G = [[sum(a * b for a, b in zip(si, sj)) for sj in S] for si in S]
    rhs = [sum(a * b for a, b in zip(si, s)) for si in S]
    try:
        Ginv = inverse(G)
    except ValueError:
        return False
    c = [sum(Ginv[i][j] * rhs[j] for j in range(len(S))) for i in range(len(S))]
    if any(x.denominator != 1 for x in c):
        return False
    recon = [sum(ci * b[t] for ci, b in zip(c, S)) for t in range(len(s))]
    return recon == list(s)


def _lattice_basis(shifts):
    den = 1
    for s in shifts:
        for x in s:
            den = den * x.denominator // math.gcd(den, x.denominator)
    rows = [[int(x * den) for x in s] for s in shifts]
    basis, _ = integer_row_basis(rows)
    return [tuple(Fraction(x, den) for x in r) for r in basis]
