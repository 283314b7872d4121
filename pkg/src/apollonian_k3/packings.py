"""Circle and sphere packings as orbits of a -2 face under the wall group.

``resolve_case`` turns a case file into concrete vectors: it solves the
stated orthogonality conditions, compares the results with the printed
tuples and assembles the generator sets.  ``build_packing`` enumerates the
orbit of the face and charts it; ``verify_packing`` checks it exactly.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .config import CaseConfig, ConfigError, builtin_config, eval_vector
from .exact import IntVector
from .geometry import (
    BoundaryChart,
    BoundarySphere,
    GeometryError,
    boundary_sphere,
    descartes_exact,
    descartes_residual,
)
from .group import (
    FACE,
    WALL,
    ConstraintError,
    ConstraintSystem,
    CuspTranslations,
    GeneratorSet,
    _mat_vec,
    null_point,
    solve_normal,
    validate_generators,
)
from .lattice import GramContext, basis_vector, pair, reflection_matrix
from .orbit import Budget, OrbitRecord, enumerate_orbit


class PackingError(ValueError):
    pass


class GeneratorValidationError(PackingError):
    pass


# --------------------------------------------------------------------------
# case resolution


@dataclass
class DerivedVector:
    name: str
    kind: str
    constraints: tuple[str, ...]
    solutions: list[IntVector]
    vector: IntVector | None
    printed: IntVector | None = None
    error: str = ""

    @property
    def matches_printed(self) -> bool | None:
        if self.printed is None or self.vector is None:
            return None
        return _same_ray(self.vector, self.printed)


@dataclass
class Discrepancy:
    name: str
    message: str


@dataclass
class ResolvedCase:
    config: CaseConfig
    ctx: GramContext
    names: dict[str, IntVector]
    derived: list[DerivedVector] = field(default_factory=list)
    discrepancies: list[Discrepancy] = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.config.name

    @property
    def face(self) -> IntVector:
        if self.config.face is None:
            raise PackingError(f"case {self.name!r} has no face wall")
        return self.vector(self.config.face)

    @property
    def seed(self) -> IntVector:
        return self.vector(self.config.seed or self.config.face)

    def vector(self, expr: str) -> IntVector:
        return eval_vector(expr, self.names, self.ctx.dim)

    def gamma(self) -> GeneratorSet:
        """Wall group generated from the solved normals."""
        names = self.config.gamma
        normals = [self.names[n] for n in names]
        return GeneratorSet.from_normals(self.ctx, normals, names)

    def printed_gamma(self) -> GeneratorSet:
        names = self.config.printed_gamma
        normals = [self.config.printed[n] for n in names]
        return GeneratorSet.from_normals(self.ctx, normals, names)

    def full_group(self) -> GeneratorSet:
        """Walls plus the reflection in the face."""
        gs = self.gamma()
        return GeneratorSet.from_normals(
            self.ctx,
            list(gs.normals) + [self.face],
            list(gs.names) + [self.config.face],
            [WALL] * len(gs) + [FACE],
        )


def _same_ray(u: Sequence[int], v: Sequence[int]) -> bool:
    """Equal up to sign."""
    return tuple(u) == tuple(v) or tuple(u) == tuple(-x for x in v)


def resolve_case(case: str | CaseConfig, m: int | None = None) -> ResolvedCase:
    cfg = builtin_config(case) if isinstance(case, str) else case
    if m is not None:
        cfg = cfg.with_m(m)
    if cfg.gram is None:
        raise ConfigError(f"case {cfg.name!r} needs m to fix its dimension")
    ctx = cfg.context()
    k = ctx.dim
    names: dict[str, IntVector] = {f"e{i + 1}": basis_vector(k, i) for i in range(k)}
    for name, expr in cfg.vectors.items():
        names[name] = eval_vector(expr, names, k)
    res = ResolvedCase(cfg, ctx, names)
    for d in cfg.derivations:
        printed = cfg.printed.get(d.name)
        try:
            cons = [eval_vector(c, names, k) for c in d.constraints]
            sys = ConstraintSystem.perpendicular(ctx, cons, d.norm)
            sols = null_point(sys) if d.kind == "null" else solve_normal(sys)
        except (ConstraintError, ConfigError) as exc:
            res.derived.append(DerivedVector(d.name, d.kind, d.constraints, [], None, printed, str(exc)))
            res.discrepancies.append(Discrepancy(d.name, f"no solution for {', '.join(d.constraints)}: {exc}"))
            continue
        chosen = None
        if printed is not None:
            chosen = next((s for s in sols if _same_ray(s, printed)), None)
        if chosen is None:
            if d.kind == "derive" and len(sols) > 1:
                res.derived.append(DerivedVector(d.name, d.kind, d.constraints, sols, None, printed, "ambiguous"))
                res.discrepancies.append(Discrepancy(d.name, f"solution space has dimension {len(sols)}"))
                continue
            chosen = sols[0]
        dv = DerivedVector(d.name, d.kind, d.constraints, sols, chosen, printed)
        res.derived.append(dv)
        names[d.name] = chosen
        if printed is not None and not dv.matches_printed:
            msg = f"printed {list(printed)} differs from {list(chosen)} solved from {', '.join(d.constraints)}"
            other = [o for o, w in cfg.printed.items() if o != d.name and _same_ray(w, chosen)]
            if other:
                msg += f" (which is the printed {other[0]})"
            res.discrepancies.append(Discrepancy(d.name, msg))
    for name, v in cfg.printed.items():
        if name in names and name not in cfg.printed_gamma:
            continue
        nn = pair(ctx, v, v)
        if name in cfg.printed_gamma:
            if nn == 0:
                res.discrepancies.append(Discrepancy(name, f"printed {list(v)} is a null vector (self-pairing 0)"))
            elif not reflection_matrix(ctx, v).integral:
                res.discrepancies.append(Discrepancy(name, f"printed {list(v)} has a non-integral reflection"))
        for c in cfg.derivations:
            if c.name != name:
                continue
            try:
                vals = [pair(ctx, v, eval_vector(x, names, k)) for x in c.constraints]
            except ConfigError:
                continue
            bad = [x for x, val in zip(c.constraints, vals) if val != 0]
            if bad:
                res.discrepancies.append(
                    Discrepancy(name, f"printed {list(v)} is not orthogonal to {', '.join(bad)}")
                )
    for c in cfg.claims:
        v = cfg.printed.get(c.name)
        if v is None:
            raise ConfigError(f"claim about {c.name!r}, which has no printed tuple")
        for x in c.constraints:
            val = pair(ctx, v, eval_vector(x, names, k))
            if val != 0:
                msg = f"printed {list(v)} is stated orthogonal to {x} but pairs to {val} with it"
                res.discrepancies.append(Discrepancy(c.name, msg))
    # a wall orthogonal to every -2 basis class fixes the starting configuration
    minus2 = [basis_vector(k, i) for i in range(k) if ctx.gram[i][i] == -2]
    for name in cfg.printed_gamma:
        v = cfg.printed[name]
        if minus2 and pair(ctx, v, v) != 0 and all(pair(ctx, v, b) == 0 for b in minus2):
            labels = ", ".join(f"e{i + 1}" for i in range(k) if ctx.gram[i][i] == -2)
            res.discrepancies.append(
                Discrepancy(name, f"printed {list(v)} is orthogonal to {labels}, so its reflection fixes all of them")
            )
    return res


# --------------------------------------------------------------------------
# Gram matrix from the configuration rules


def _rule_labels(value: str, k: int) -> list[int]:
    if value.strip() == "all":
        return list(range(k))
    out = []
    for tok in value.split():
        if not (tok.startswith("e") and tok[1:].isdigit()):
            raise ConfigError(f"rule expects basis labels, got {tok!r}")
        out.append(int(tok[1:]) - 1)
    return out


def reconstruct_gram(case: str | CaseConfig, m: int | None = None) -> GramContext:
    """Rebuild the Gram matrix from the incidence rules and compare it with the bundled one.

    Rules: ``minus2`` classes have square -2 and the cusp square 0; each
    pair of ``tangent`` classes pairs to 2; ``on_cusp`` classes pass
    through the cusp (pairing 0).  ``fiber = L: a b`` says the class ``L``
    is tangent to ``a`` and ``b``; that linear condition fixes the pairing
    of ``a`` and ``b`` with the cusp.
    """
    cfg = builtin_config(case) if isinstance(case, str) else case
    if m is not None:
        cfg = cfg.with_m(m)
    if cfg.family == "all-tangent" and cfg.m is None:
        raise ConfigError("the family case needs m")
    k = len(cfg.gram) if cfg.gram is not None else cfg.m + 2
    g: list[list[int | None]] = [[None] * k for _ in range(k)]

    def put(i, j, val, why):
        for a, b in ((i, j), (j, i)):
            if g[a][b] is not None and g[a][b] != val:
                raise ConfigError(f"rule {why} sets entry ({a + 1},{b + 1}) to {val}, already {g[a][b]}")
            g[a][b] = val

    for i in _rule_labels(cfg.rules.get("minus2", ""), k):
        put(i, i, -2, "minus2")
    cusp = cfg.cusp_index
    if cusp is not None:
        put(cusp, cusp, 0, "cusp")
    for i, j in itertools.combinations(_rule_labels(cfg.rules.get("tangent", ""), k), 2):
        put(i, j, 2, "tangent")
    for i in _rule_labels(cfg.rules.get("on_cusp", ""), k):
        if cusp is None:
            raise ConfigError("on_cusp rule without a cusp")
        put(i, cusp, 0, "on_cusp")
    fiber = cfg.rules.get("fiber")
    if fiber:
        lname, sep, members = fiber.partition(":")
        if not sep or cusp is None:
            raise ConfigError("fiber rule must read 'L: e1 e2' and needs a cusp")
        names = {f"e{i + 1}": basis_vector(k, i) for i in range(k)}
        L = eval_vector(cfg.vectors.get(lname.strip(), lname), names, k)
        if L[cusp] == 0:
            raise ConfigError("fiber class does not involve the cusp")
        for i in _rule_labels(members, k):
            # pair(e_i, L) = sum_j L_j g[i][j] = 2, solved for g[i][cusp]
            rest = 0
            for j in range(k):
                if j == cusp or L[j] == 0:
                    continue
                if g[i][j] is None:
                    raise ConfigError(f"fiber rule needs entry ({i + 1},{j + 1}) first")
                rest += L[j] * g[i][j]
            val = Fraction(2 - rest, L[cusp])
            if val.denominator != 1:
                raise ConfigError("fiber rule forces a non-integer pairing")
            put(i, cusp, int(val), "fiber")
    missing = [(i + 1, j + 1) for i in range(k) for j in range(k) if g[i][j] is None]
    if missing:
        raise ConfigError(f"rules leave entries {missing} undetermined")
    gram = tuple(tuple(int(x) for x in row) for row in g)
    if cfg.gram is not None and gram != tuple(tuple(r) for r in cfg.gram):
        raise ConfigError(f"reconstructed Gram matrix {gram} differs from the bundled one")
    return GramContext(gram, cusp, name=cfg.name)


# --------------------------------------------------------------------------
# packings


@dataclass
class Packing:
    case: str
    ctx: GramContext
    chart: BoundaryChart
    elements: list[BoundarySphere]
    record: OrbitRecord | None = None
    translations: CuspTranslations | None = None
    verification: "VerificationReport | None" = None
    generators: GeneratorSet | None = None

    def __len__(self):
        return len(self.elements)

    @property
    def normals(self) -> list[IntVector]:
        return [e.normal for e in self.elements]


def _case_chart(res: ResolvedCase) -> BoundaryChart:
    try:
        return BoundaryChart.build(res.ctx, face=res.face, normalize="strip")
    except GeometryError as exc:
        raise PackingError(f"cannot build the chart: {exc}") from exc


def build_packing(
    case: str | CaseConfig | ResolvedCase,
    *,
    max_depth: int | None = None,
    max_curvature: float | Fraction | None = None,
    max_elements: int = 2_000_000,
    strict: bool = False,
    workers: int = 1,
    verify: bool = True,
    printed: bool = False,
) -> Packing:
    """Enumerate the orbit of the face under the wall group and chart it.

    ``max_curvature`` is in normalized units (the strip has width 1).  With
    a curvature bound the orbit is taken modulo the translations fixing the
    cusp, so ``elements`` holds one representative per translation class.
    With only a depth bound the plain breadth-first orbit is returned.
    ``printed=True`` uses the printed wall tuples instead of the solved ones.
    """
    res = case if isinstance(case, ResolvedCase) else resolve_case(case)
    gs = res.printed_gamma() if printed else res.gamma()
    report = validate_generators(gs)
    if not report.ok:
        names = ", ".join(c.name for c in report.failures())
        raise GeneratorValidationError(f"generator validation failed for {names}")
    chart = _case_chart(res)
    if max_depth is None and max_curvature is None:
        raise PackingError("a depth or curvature budget is required")
    limit = None
    if max_curvature is not None:
        t = Fraction(max_curvature) if not isinstance(max_curvature, float) else Fraction(str(max_curvature))
        if t < 0:
            raise PackingError("max_curvature must be nonnegative")
        limit = t * t * chart.scale_sq
    budget = Budget(max_depth=max_depth, max_curvature_sq=limit, max_elements=max_elements, strict=strict)
    record = enumerate_orbit(
        res.ctx, gs, res.seed, budget, reduce_translations=limit is not None, workers=workers
    )
    elements = [boundary_sphere(chart, e.normal, record.word(e.normal)) for e in record.elements]
    p = Packing(res.name, res.ctx, chart, elements, record, record.translations, generators=gs)
    if verify:
        p.verification = verify_packing(p)
    return p


# --------------------------------------------------------------------------
# verification


@dataclass
class VerificationReport:
    n_elements: int
    pairs_checked: int = 0
    translates: int = 0
    intersecting: list = field(default_factory=list)
    tangencies: int = 0
    cliques: int = 0
    descartes_exact_failures: list = field(default_factory=list)
    descartes_undecided: int = 0
    descartes_float_failures: list = field(default_factory=list)
    max_float_residual: float = 0.0
    bad_norms: list = field(default_factory=list)
    negative_curvature: list = field(default_factory=list)
    zero_curvature: int = 0
    translation_problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (
            self.intersecting
            or self.descartes_exact_failures
            or self.descartes_float_failures
            or self.bad_norms
            or self.negative_curvature
            or self.translation_problems
        )

    def summary(self) -> dict:
        return {
            "ok": self.ok,
            "elements": self.n_elements,
            "pairs_checked": self.pairs_checked,
            "translates": self.translates,
            "intersecting": len(self.intersecting),
            "tangencies": self.tangencies,
            "cliques": self.cliques,
            "descartes_exact_failures": len(self.descartes_exact_failures),
            "descartes_undecided": self.descartes_undecided,
            "descartes_float_failures": len(self.descartes_float_failures),
            "max_float_residual": self.max_float_residual,
            "bad_norms": len(self.bad_norms),
            "zero_curvature": self.zero_curvature,
        }

    def problems(self, limit: int = 10) -> list[str]:
        out = []
        for a, b, k in self.intersecting[:limit]:
            shift = f" translated by {list(k)}" if any(k) else ""
            out.append(f"intersecting pair: {list(a)} and {list(b)}{shift}")
        for n, nn in self.bad_norms[:limit]:
            out.append(f"normal {list(n)} has self-pairing {nn}, expected -2")
        for q in self.descartes_exact_failures[:limit]:
            out.append(f"Descartes identity fails on {[list(v) for v in q]}")
        for q, r in self.descartes_float_failures[:limit]:
            out.append(f"Descartes float residual {r:.3g} on {[list(v) for v in q]}")
        for n in self.negative_curvature[:limit]:
            out.append(f"negative curvature for {list(n)}")
        out.extend(self.translation_problems[:limit])
        return out


# float64 sums of integer products are exact below 2**53
_EXACT_FLOAT = 2**53


def _exact_pairings(A: np.ndarray, JB: np.ndarray, bound: int) -> np.ndarray:
    """Integer matrix ``A @ JB`` computed exactly.

    ``bound`` caps the absolute value of every partial sum; below 2**53 a
    float64 product is exact, otherwise Python integers are used.
    """
    if bound < _EXACT_FLOAT:
        return np.rint(A.astype(np.float64) @ JB.astype(np.float64)).astype(np.int64)
    out = np.empty((A.shape[0], JB.shape[1]), dtype=object)
    Ao = A.astype(object)
    Bo = JB.astype(object)
    for i in range(A.shape[0]):
        out[i] = Ao[i] @ Bo
    return out


def _translation_window(p: Packing, transl: CuspTranslations, moving: list[int]) -> list[tuple[int, ...]]:
    """Exponents ``k`` for which a translate of one element could meet another.

    The translations act on the chart as Euclidean translations ``tau_j``.
    Two spheres can only meet when their centres are within the sum of the
    radii, which bounds ``|sum k_j tau_j|``.
    """
    d = transl.rank
    if not moving:
        return [(0,) * d]
    chart = p.chart
    F = chart.F
    base = np.array(chart.chart_point(F))
    taus = []
    for j in range(d):
        ks = tuple(int(i == j) for i in range(d))
        taus.append(np.array(chart.chart_point(transl.apply(ks, F))) - base)
    T = np.array(taus)  # d x (k-2)
    centers = np.array([p.elements[i].center for i in moving])
    radii = max(p.elements[i].radius for i in moving)
    # bounding box diameter of the centres
    diam = float(np.linalg.norm(centers.max(axis=0) - centers.min(axis=0)))
    reach = diam + 2 * radii + 1e-6
    smin = float(np.linalg.svd(T, compute_uv=False).min())
    if smin <= 0:
        raise PackingError("translation vectors are degenerate in the chart")
    R = int(math.floor(reach / smin)) + 1
    out = []
    for ks in itertools.product(range(-R, R + 1), repeat=d):
        if float(np.linalg.norm(np.array(ks) @ T)) <= reach:
            out.append(ks)
    return out


def verify_packing(p: Packing, *, tol: float = 1e-9, block: int = 512, cliques: bool = True) -> VerificationReport:
    """Exact non-overlap scan, norm checks and Descartes on tangent cliques.

    Translates of the stored elements are included when the packing is a
    quotient by cusp translations.
    """
    ctx = p.ctx
    E = p.chart.E
    normals = [e.normal for e in p.elements]
    n = len(normals)
    rep = VerificationReport(n)
    for e in p.elements:
        nn = pair(ctx, e.normal, e.normal)
        if nn != -2:
            rep.bad_norms.append((e.normal, nn))
        if pair(ctx, e.normal, E) < 0 or e.curvature < 0:
            rep.negative_curvature.append(e.normal)
    rep.zero_curvature = sum(1 for e in p.elements if e.curvature_sq == 0)
    if n == 0:
        return rep
    transl = p.translations
    invariant = [False] * n
    moving = list(range(n))
    windows: list[tuple[int, ...]] = [()]
    if transl is not None:
        for t, m in enumerate(transl.matrices):
            if _mat_vec(m, E) != tuple(E):
                rep.translation_problems.append(f"translation {t} does not fix the cusp")
        invariant = [transl.invariant(v) for v in normals]
        moving = [i for i in range(n) if not invariant[i]]
        for i in range(n):
            if not invariant[i] and p.elements[i].curvature_sq == 0:
                rep.translation_problems.append(f"flat element {list(normals[i])} is moved by translations")
        windows = _translation_window(p, transl, moving)
        windows = [ks for ks in windows if ks > (0,) * transl.rank] + [(0,) * transl.rank]
        windows.sort()
    rep.translates = len(windows)

    gram = np.array(ctx.gram, dtype=np.int64)
    A = np.array(normals, dtype=object)
    gmax = int(np.abs(gram).sum(axis=1).max())
    # tangency graph: node (i, ks); flat elements only appear with ks = 0
    zero = tuple(0 for _ in windows[0]) if windows[0] else ()
    adj: dict[int, set] = {i: set() for i in range(n)}
    for ks in windows:
        if any(ks):
            cols = moving
            B = [transl.apply(ks, normals[i]) for i in cols]
        else:
            cols = list(range(n))
            B = normals
        if not cols:
            continue
        Bm = np.array(B, dtype=object)
        amax = int(np.abs(A).max())
        bmax = int(np.abs(Bm).max())
        bound = ctx.dim * gmax * amax * bmax
        JB = (Bm @ gram.astype(object)).T  # k x len(cols)
        if bound < _EXACT_FLOAT:
            JB = JB.astype(np.int64)
            Ai = A.astype(np.int64)
        else:
            Ai = A
        for start in range(0, n, block):
            rows = range(start, min(n, start + block))
            P = _exact_pairings(Ai[start : start + block], JB, bound)
            for r, i in enumerate(rows):
                if any(ks) and invariant[i]:
                    continue
                # unordered pairs only: within the cell take columns after i
                offset = 0 if any(ks) else i + 1
                absv = np.abs(P[r][offset:])
                hits = np.nonzero(absv <= 2)[0]
                rep.pairs_checked += len(absv)
                for h in hits:
                    j = cols[offset + int(h)]
                    v = int(absv[h])
                    if v < 2:
                        rep.intersecting.append((normals[i], normals[j], ks))
                    else:
                        rep.tangencies += 1
                        adj[i].add((j, ks))
                        if any(ks):
                            adj[j].add((i, tuple(-x for x in ks)))
                        else:
                            adj[j].add((i, ks))
    if cliques and not rep.bad_norms:
        _check_cliques(p, rep, adj, invariant, zero, tol)
    return rep


def _check_cliques(p, rep, adj, invariant, zero, tol):
    """Descartes (circles) or Soddy-Gosset (spheres) on mutually tangent families."""
    bdim = p.chart.boundary_dim
    size = bdim + 2
    elements = p.elements

    def node_adj(a, b):
        (i, ka), (j, kb) = a, b
        if invariant[i] and invariant[j]:
            return (j, zero) in adj[i]
        if invariant[i]:
            return (i, zero) in adj[j]
        if invariant[j]:
            return (j, zero) in adj[i]
        rel = tuple(y - x for x, y in zip(ka, kb))
        return (j, rel) in adj[i]

    for u in range(len(elements)):
        if invariant[u]:
            continue
        anchor = (u, zero)
        cand = sorted(
            (
                (j, k if not invariant[j] else zero)
                for j, k in adj[u]
                if invariant[j] or (j, k) > (u, zero)
            )
        )
        cand = list(dict.fromkeys(cand))
        _extend(anchor, [anchor], cand, size, node_adj, elements, rep, tol, bdim)


def _extend(anchor, clique, cand, size, node_adj, elements, rep, tol, bdim):
    if len(clique) == size:
        rep.cliques += 1
        qs = [elements[i].curvature_sq for i, _ in clique]
        verdict = descartes_exact(qs, bdim)
        nodes = [elements[i].normal for i, _ in clique]
        if verdict is None:
            rep.descartes_undecided += 1
        elif not verdict:
            rep.descartes_exact_failures.append(nodes)
        r = descartes_residual([elements[i].curvature for i, _ in clique], bdim)
        rep.max_float_residual = max(rep.max_float_residual, r)
        if r > tol:
            rep.descartes_float_failures.append((nodes, r))
        return
    for idx, c in enumerate(cand):
        if all(node_adj(c, x) for x in clique[1:]):
            rest = [d for d in cand[idx + 1 :] if node_adj(c, d)]
            _extend(anchor, clique + [c], rest, size, node_adj, elements, rep, tol, bdim)
