"""Independent reference computations used by the tests.

Nothing here imports the package: the oracles work with plain curvatures
and Euclidean centres, so agreement with the lattice pipeline is evidence
rather than a restatement.
"""
import itertools
import math
from fractions import Fraction

S3 = math.sqrt(3)


def circle_curvatures(t_max):
    """Curvatures of one period of the strip packing of width 1.

    Two boundary lines (curvature 0), one curvature-2 circle, and the
    Descartes tree grown from the two curvilinear triangles per period.
    """
    out = [0, 0]
    if t_max >= 2:
        out.append(2)
    stack = [(0, 2, 2), (0, 2, 2)]
    while stack:
        a, b, c = stack.pop()
        s = a * b + b * c + c * a
        r = math.isqrt(s)
        assert r * r == s
        d = a + b + c + 2 * r
        if d > t_max:
            continue
        out.append(d)
        stack += [(a, b, d), (a, c, d), (b, c, d)]
    return sorted(out)


def _cell(x, y):
    b = y / (S3 / 2)
    a = x - 0.5 * b
    return round(a % 1.0, 7) % 1.0, round(b % 1.0, 7) % 1.0


def sphere_curvatures(t_max):
    """Curvatures of one translation class of the slab sphere packing.

    The slab has width 1; unit-diameter spheres sit on a triangular lattice
    of spacing 1.  Rows are (k, k*x, k*y, k*z), with planes carrying their
    outward unit normal, and the Soddy-Gosset move replaces one row of a
    five-clique by (sum of the other four) - (itself).  Spheres and cliques
    are deduplicated by curvature and centre modulo the lattice.
    """
    P0 = (0.0, 0.0, 0.0, -1.0)
    P1 = (0.0, 0.0, 0.0, 1.0)

    def ball(k, c):
        return (float(k), k * c[0], k * c[1], k * c[2])

    start = (P0, P1, ball(2, (0, 0, 0.5)), ball(2, (1, 0, 0.5)), ball(2, (0.5, S3 / 2, 0.5)))

    def key(w):
        if abs(w[0]) < 1e-9:
            return ("plane", round(w[3]))
        a, b = _cell(w[1] / w[0], w[2] / w[0])
        return (round(w[0], 6), a, b, round(w[3] / w[0], 7))

    def clique_key(state):
        best = None
        for m in state:
            if abs(m[0]) < 1e-9:
                continue
            cx, cy = m[1] / m[0], m[2] / m[0]
            keys = []
            for w in state:
                if abs(w[0]) < 1e-9:
                    keys.append(("plane", round(w[3])))
                else:
                    x, y = w[1] / w[0] - cx, w[2] / w[0] - cy
                    keys.append((round(w[0], 6), round(x, 6), round(y, 6), round(w[3] / w[0], 6)))
            cand = repr(sorted(keys, key=repr))
            if best is None or cand < best:
                best = cand
        return best

    spheres = {key(w): w[0] for w in start}
    seen = {clique_key(start)}
    todo = [start]
    while todo:
        st = todo.pop()
        tot = [sum(w[j] for w in st) for j in range(4)]
        for i, w in enumerate(st):
            new = tuple(tot[j] - 2 * w[j] for j in range(4))
            if new[0] > t_max + 1e-9:
                continue
            ns = st[:i] + (new,) + st[i + 1:]
            ck = clique_key(ns)
            if ck in seen:
                continue
            seen.add(ck)
            spheres.setdefault(key(new), new[0])
            todo.append(ns)
    return sorted(round(k) for k in spheres.values())


def words_orbit(mats, seed, depth, canon):
    """All canonical images of ``seed`` under words of length <= depth (no BFS, no dedup pruning)."""
    out = {canon(seed)}
    k = len(seed)
    for L in range(1, depth + 1):
        for word in itertools.product(range(len(mats)), repeat=L):
            if any(a == b for a, b in zip(word, word[1:])):
                continue
            v = list(seed)
            for g in word:
                m = mats[g]
                v = [sum(m[i][j] * v[j] for j in range(k)) for i in range(k)]
            out.add(canon(tuple(v)))
    return out


def rational_signature(gram):
    """Inertia via Sylvester's criterion on leading minors after a random congruence."""
    n = len(gram)
    import random

    rng = random.Random(7)
    for _ in range(50):
        P = [[rng.randint(-3, 3) for _ in range(n)] for _ in range(n)]
        M = [[Fraction(sum(P[a][i] * gram[a][b] * P[b][j] for a in range(n) for b in range(n))) for j in range(n)]
             for i in range(n)]
        minors = [Fraction(1)]
        ok = True
        for k in range(1, n + 1):
            d = _det([row[:k] for row in M[:k]])
            if d == 0:
                ok = False
                break
            minors.append(d)
        if not ok:
            continue
        # sign changes between consecutive leading minors count negative eigenvalues
        neg = sum(1 for a, b in zip(minors, minors[1:]) if (a > 0) != (b > 0))
        return n - neg, neg, 0
    raise RuntimeError("no nondegenerate congruence found")


def _det(m):
    m = [list(r) for r in m]
    n = len(m)
    d = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if m[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            m[c], m[p] = m[p], m[c]
            d = -d
        d *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            for j in range(c, n):
                m[r][j] -= f * m[c][j]
    return d
