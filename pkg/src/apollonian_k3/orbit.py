"""Breadth-first orbit enumeration with exact deduplication.

The orbit of a seed wall under a set of integral reflections is explored
level by level.  Images are canonicalized (primitive, sign fixed) and
stored in a hash map; images beyond the budget are never expanded.  Each
level is sorted before it is merged, so the record does not depend on how
the frontier was split between workers.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .exact import IntVector
from .group import CuspTranslations, GeneratorSet, GroupError, OrbitBudgetExceeded, _mat_vec
from .lattice import GramContext, pair

CURVATURE = "curvature"
PAIRING = "pairing"


@dataclass(frozen=True)
class Budget:
    """Limits for an orbit enumeration.

    ``max_curvature_sq`` bounds the exact squared curvature (inclusive);
    ``max_pairing`` bounds ``v.D`` strictly in pairing mode.  Exceeding
    ``max_elements`` truncates the record, or raises when ``strict``.
    """

    max_depth: int | None = None
    max_curvature_sq: Fraction | None = None
    max_pairing: int | None = None
    max_elements: int = 2_000_000
    strict: bool = False

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be nonnegative")
        if self.max_curvature_sq is not None:
            object.__setattr__(self, "max_curvature_sq", Fraction(self.max_curvature_sq))
            if self.max_curvature_sq < 0:
                raise ValueError("max_curvature_sq must be nonnegative")
        if self.max_elements < 1:
            raise ValueError("max_elements must be positive")


@dataclass(frozen=True)
class OrbitElement:
    normal: IntVector
    value: Fraction | int
    depth: int
    parent: IntVector | None = None
    # (translation exponents applied before the generator, generator index,
    #  exponents applied afterwards to land in the fundamental cell)
    step: tuple | None = None


@dataclass
class LevelStats:
    depth: int
    expanded: int
    candidates: int
    new: int
    over_budget: int


@dataclass
class OrbitRecord:
    seed: IntVector
    measure: str
    elements: list[OrbitElement]
    levels: list[LevelStats]
    budget: Budget
    truncation: str | None = None
    complete_bound: Fraction | int | None = None
    complete_strict: bool = False
    translations: CuspTranslations | None = None
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {e.normal: e for e in self.elements}

    def __len__(self):
        return len(self.elements)

    def __contains__(self, normal):
        return tuple(normal) in self._index

    def get(self, normal) -> OrbitElement:
        return self._index[tuple(normal)]

    @property
    def normals(self) -> list[IntVector]:
        return [e.normal for e in self.elements]

    def word(self, normal) -> tuple[int, ...]:
        """Generator indices in application order taking the seed to ``normal``."""
        chain = []
        e = self._index[tuple(normal)]
        while e.parent is not None:
            chain.append(e.step)
            e = self._index[e.parent]
        out: list[int] = []
        for pre, g, post in reversed(chain):
            if pre and self.translations is not None:
                out.extend(self.translations.word(pre))
            out.append(g)
            if post and self.translations is not None:
                out.extend(self.translations.word(post))
        return tuple(out)


@dataclass(frozen=True)
class _Expander:
    gram: tuple
    gens: tuple
    cusp_fixed: tuple[bool, ...]
    centers: tuple
    E: IntVector | None
    D: IntVector | None
    limit: Fraction | int | None
    translations: CuspTranslations | None

    def _pair(self, u, v):
        return sum(a * b for a, b in zip(u, _mat_vec(self.gram, v)))

    def canon(self, v) -> IntVector:
        g = math.gcd(*v)
        v = tuple(x // g for x in v)
        if self.D is not None:
            s = self._pair(v, self.D)
            if s < 0:
                v = tuple(-x for x in v)
            return v
        s = self._pair(v, self.E) if self.E is not None else 0
        if s < 0 or (s == 0 and next(x for x in v if x) < 0):
            v = tuple(-x for x in v)
        return v

    def value(self, v):
        if self.D is not None:
            return self._pair(v, self.D)
        nn = self._pair(v, v)
        if nn >= 0:
            raise GroupError(f"orbit element {v} is not spacelike")
        s = self._pair(v, self.E) if self.E is not None else 0
        return Fraction(s * s, -nn)

    def within(self, val) -> bool:
        if self.limit is None:
            return True
        if self.D is not None:
            return val < self.limit
        return val <= self.limit

    def expand(self, items):
        out = []
        over = 0
        cands = 0
        for v, rank in items:
            bound = None
            if self.translations is not None:
                nn = self._pair(v, v)
                y = self.limit * -nn
                bound = math.isqrt(y.numerator // y.denominator)
            for g, mat in enumerate(self.gens):
                if self.translations is not None and not self.cusp_fixed[g]:
                    images = [
                        (ks, _mat_vec(mat, self.translations.apply(ks, v)))
                        for ks in self.translations.translates_within(self.centers[g], v, bound)
                    ]
                else:
                    images = [((), _mat_vec(mat, v))]
                for pre, img in images:
                    cands += 1
                    c = self.canon(img)
                    val = self.value(c)
                    if not self.within(val):
                        over += 1
                        continue
                    post = ()
                    if self.translations is not None and self._pair(c, self.E) > 0:
                        c, post = self.translations.reduce(c)
                        if not any(post):
                            post = ()
                    out.append((c, val, rank, (tuple(pre) if any(pre) else (), g, post)))
        return out, cands, over


def _expand_chunk(args):
    expander, items = args
    return expander.expand(items)


def _chunks(seq, n):
    size = max(1, math.ceil(len(seq) / n))
    return [seq[i : i + size] for i in range(0, len(seq), size)]


def enumerate_orbit(
    ctx: GramContext,
    gs: GeneratorSet,
    seed: Sequence[int],
    budget: Budget,
    *,
    reduce_translations: bool = False,
    pairing_with: Sequence[int] | None = None,
    workers: int = 1,
    translations: CuspTranslations | None = None,
) -> OrbitRecord:
    """Breadth-first closure of ``seed`` under the reflections in ``gs``.

    In the default curvature mode values are exact squared curvatures seen
    from the lattice cusp.  With ``pairing_with=D`` values are ``v.D``
    (vectors oriented so it is positive) and ``budget.max_pairing`` applies.
    ``reduce_translations`` runs the search modulo the cusp translations,
    which needs a curvature bound.
    """
    if len(gs) == 0:
        raise GroupError("empty generator set")
    gens = gs.int_matrices()
    seed = tuple(int(x) for x in seed)
    if pair(ctx, seed, seed) >= 0:
        raise GroupError("seed must be spacelike")
    if workers < 1:
        raise ValueError("workers must be positive")
    D = tuple(pairing_with) if pairing_with is not None else None
    E = ctx.cusp if ctx.cusp_index is not None else None
    if D is not None:
        limit = budget.max_pairing
        measure = PAIRING
        if reduce_translations:
            raise GroupError("translation reduction only applies to curvature mode")
    else:
        if E is None:
            raise GroupError("curvature mode needs a lattice with a cusp")
        limit = budget.max_curvature_sq
        measure = CURVATURE
    transl = None
    if reduce_translations:
        if limit is None:
            raise GroupError("enumeration modulo translations needs a curvature budget")
        transl = translations or CuspTranslations.discover(ctx, gens, E)
    cusp_fixed = tuple(E is not None and _mat_vec(m, E) == E for m in gens)
    centers = tuple(_mat_vec(m, E) if E is not None else None for m in gens)
    expander = _Expander(tuple(ctx.gram), gens, cusp_fixed, centers, E, D, limit, transl)

    root = expander.canon(seed)
    if transl is not None and expander._pair(root, E) > 0:
        root, _ = transl.reduce(root)
    seen: dict[IntVector, OrbitElement] = {root: OrbitElement(root, expander.value(root), 0)}
    frontier = [root]
    levels: list[LevelStats] = []
    truncation = None
    cut_values = []
    depth = 0
    pool = None
    if workers > 1:
        ctx_name = "fork" if "fork" in _start_methods() else None
        import multiprocessing as mp

        pool = ProcessPoolExecutor(workers, mp_context=mp.get_context(ctx_name) if ctx_name else None)
    try:
        while frontier:
            if budget.max_depth is not None and depth >= budget.max_depth:
                truncation = "max_depth"
                break
            items = [(v, i) for i, v in enumerate(frontier)]
            if pool is None:
                results = [expander.expand(items)]
            else:
                results = list(pool.map(_expand_chunk, [(expander, ch) for ch in _chunks(items, workers * 4)]))
            best: dict[IntVector, tuple] = {}
            ncand = nover = 0
            for out, c, o in results:
                ncand += c
                nover += o
                for child, val, rank, step in out:
                    if child in seen:
                        continue
                    key = (rank, step[1], step[0], step[2])
                    cur = best.get(child)
                    if cur is None or key < cur[0]:
                        best[child] = (key, val, frontier[rank], step)
            new = sorted(best)
            depth += 1
            if len(seen) + len(new) > budget.max_elements:
                if budget.strict:
                    raise OrbitBudgetExceeded(f"orbit exceeds {budget.max_elements} elements at depth {depth}")
                room = budget.max_elements - len(seen)
                ordered = sorted(new, key=lambda c: (best[c][1], c))
                kept, dropped = ordered[:room], ordered[room:]
                cut_values = [best[c][1] for c in dropped] + [best[c][1] for c in kept]
                new = sorted(kept)
                truncation = "max_elements"
            for child in new:
                _, val, parent, step = best[child]
                seen[child] = OrbitElement(child, val, depth, parent, step)
            levels.append(LevelStats(depth, len(frontier), ncand, len(new), nover))
            if truncation:
                break
            frontier = new
    finally:
        if pool is not None:
            pool.shutdown()

    complete_bound, strict = None, False
    if truncation is None:
        complete_bound = limit
        strict = D is not None
    elif truncation == "max_elements" and cut_values:
        complete_bound, strict = min(cut_values), True
    elements = sorted(seen.values(), key=lambda e: (e.value, e.normal))
    return OrbitRecord(root, measure, elements, levels, budget, truncation, complete_bound, strict, transl)


def _start_methods():
    import multiprocessing as mp

    return mp.get_all_start_methods()


def apply_word(gs: GeneratorSet, word: Sequence[int], v: Sequence[int]) -> IntVector:
    mats = gs.int_matrices()
    out = tuple(v)
    for g in word:
        out = _mat_vec(mats[g], out)
    return out


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))
