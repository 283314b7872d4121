"""JSON and SVG output for packings, and reloading JSON for re-verification."""
from __future__ import annotations

import json
from fractions import Fraction
from xml.sax.saxutils import quoteattr

from .config import BUILTIN, ConfigError, builtin_config
from .geometry import BoundaryChart, boundary_sphere, canonical_normal, curvature_sq
from .group import CuspTranslations, GeneratorSet, validate_generators
from .lattice import GramContext, LatticeError
from .orbit import apply_word
from .packings import Packing, VerificationReport, verify_packing

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


def _frac(q: Fraction) -> dict:
    return {"num": q.numerator, "den": q.denominator}


def packing_to_dict(p: Packing, generators: GeneratorSet | None = None, budget: dict | None = None) -> dict:
    chart = p.chart
    if generators is None:
        generators = p.generators
    els = []
    for e in p.elements:
        d = {
            "normal": list(e.normal),
            "curvature_sq": _frac(e.curvature_sq),
            "curvature": e.curvature,
            "word": list(e.word),
        }
        if e.center is not None:
            d["center"] = list(e.center)
            d["radius"] = e.radius
        else:
            d["line"] = {"point": list(e.line["point"]), "normal": list(e.line["normal"])}
        els.append(d)
    out = {
        "schema": SCHEMA_VERSION,
        "case": p.case,
        "gram": [list(r) for r in p.ctx.gram],
        "cusp_index": p.ctx.cusp_index,
        "chart": {
            "scale": chart.scale,
            "scale_sq": _frac(chart.scale_sq),
            "E": list(chart.E),
            "F": list(chart.F),
            "face": list(chart.face) if chart.face is not None else None,
        },
        "quotient": p.translations is not None,
        "elements": els,
    }
    if p.record is not None:
        out["seed"] = list(p.record.seed)
    if generators is not None:
        out["generators"] = {"names": list(generators.names), "normals": [list(n) for n in generators.normals]}
    if budget is not None:
        out["budget"] = budget
    if p.verification is not None:
        out["verification"] = p.verification.summary()
    return out


def dumps(data: dict) -> str:
    return json.dumps(data, sort_keys=True, indent=1) + "\n"


def _int_list(x, what):
    if not isinstance(x, list) or not x or not all(isinstance(v, int) and not isinstance(v, bool) for v in x):
        raise SchemaError(f"{what} must be a non-empty list of integers")
    return tuple(x)


def packing_from_dict(data: dict) -> tuple[Packing, list[str]]:
    """Rebuild a packing from exact lattice data only; floats in the file are ignored.

    Returns the packing and a list of problems found while loading (stored
    exact curvatures that disagree with the normals, and so on).
    """
    if not isinstance(data, dict):
        raise SchemaError("top level must be an object")
    for key in ("case", "gram", "elements", "chart"):
        if key not in data:
            raise SchemaError(f"missing key {key!r}")
    gram = [list(_int_list(r, "gram row")) for r in data["gram"]] if isinstance(data["gram"], list) else None
    if not gram:
        raise SchemaError("gram must be a list of integer rows")
    case = data["case"]
    if case in BUILTIN:
        bundled = builtin_config(case).gram
        if tuple(tuple(r) for r in gram) != tuple(tuple(r) for r in bundled):
            raise SchemaError(f"Gram matrix does not match the built-in {case} case")
    try:
        ctx = GramContext(tuple(tuple(r) for r in gram), data.get("cusp_index"), name=str(case))
    except LatticeError as exc:
        raise SchemaError(f"invalid Gram matrix: {exc}") from exc
    ch = data["chart"]
    if not isinstance(ch, dict):
        raise SchemaError("chart must be an object")
    E = _int_list(ch.get("E"), "chart.E")
    F = _int_list(ch.get("F"), "chart.F")
    face = ch.get("face")
    chart = BoundaryChart.build(
        ctx, E=E, F=F, face=_int_list(face, "chart.face") if face is not None else None,
        normalize="strip" if face is not None else "none",
    )
    problems = []
    elements = []
    if not isinstance(data["elements"], list):
        raise SchemaError("elements must be a list")
    gs = None
    gens = data.get("generators")
    if gens is not None:
        if not isinstance(gens, dict) or "normals" not in gens:
            raise SchemaError("generators must list their normals")
        gs = GeneratorSet.from_normals(ctx, [_int_list(v, "generator") for v in gens["normals"]], gens.get("names"))
        if not validate_generators(gs).ok:
            problems.append("generators are not all integral reflections")
            gs = None
    seed = data.get("seed", ch.get("face"))
    seed = _int_list(seed, "seed") if seed is not None else None
    for i, el in enumerate(data["elements"]):
        if not isinstance(el, dict) or "normal" not in el:
            raise SchemaError(f"element {i} has no lattice normal")
        n = _int_list(el["normal"], f"element {i} normal")
        if len(n) != ctx.dim:
            raise SchemaError(f"element {i} normal has the wrong length")
        word = el.get("word", [])
        try:
            sph = boundary_sphere(chart, n, word)
        except (ValueError, LatticeError) as exc:
            problems.append(f"element {i} {list(n)}: {exc}")
            continue
        if gs is not None and seed is not None and isinstance(word, list):
            if not all(isinstance(g, int) and 0 <= g < len(gs) for g in word):
                problems.append(f"element {i} {list(n)}: word has unknown generator indices")
            elif canonical_normal(ctx, apply_word(gs, word, seed), E) != sph.normal:
                problems.append(f"element {i} {list(n)}: its word does not lead from the seed to this normal")
        cs = el.get("curvature_sq")
        if isinstance(cs, dict) and {"num", "den"} <= set(cs):
            stored = Fraction(cs["num"], cs["den"])
            if stored != curvature_sq(ctx, E, n):
                problems.append(f"element {i} {list(n)}: stored curvature_sq {stored} does not match the normal")
        elements.append(sph)
    transl = None
    if data.get("quotient"):
        if gens is None:
            raise SchemaError("a quotient packing must list its generators")
        if gs is not None:
            transl = CuspTranslations.discover(ctx, gs.int_matrices(), E)
    return Packing(str(case), ctx, chart, elements, None, transl, generators=gs), problems


def verify_json(text: str) -> tuple[VerificationReport, list[str]]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    p, problems = packing_from_dict(data)
    rep = verify_packing(p)
    return rep, problems + rep.problems()


def _g(x: float) -> str:
    s = f"{x:.9g}"
    return "0" if s == "-0" else s


def packing_to_svg(p: Packing, margin: float = 0.25) -> str:
    """Planar drawing of a circle packing in the strip chart.

    One ``<circle>`` per circle and one ``<line>`` per flat element; the
    y axis is flipped so the strip reads upwards.
    """
    if p.chart.boundary_dim != 2:
        raise ConfigError("SVG output is only available for circle packings")
    circles = [e for e in p.elements if e.center is not None]
    flats = [e for e in p.elements if e.center is None]
    xs = [c.center[0] - c.radius for c in circles] + [c.center[0] + c.radius for c in circles]
    ys = [c.center[1] - c.radius for c in circles] + [c.center[1] + c.radius for c in circles]
    for f in flats:
        xs.append(f.line["point"][0])
        ys.append(f.line["point"][1])
    xmin, xmax = (min(xs), max(xs)) if xs else (0.0, 1.0)
    ymin, ymax = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if xmax - xmin < 1:
        mid = (xmin + xmax) / 2
        xmin, xmax = mid - 0.5, mid + 0.5
    if ymax - ymin < 1:
        mid = (ymin + ymax) / 2
        ymin, ymax = mid - 0.5, mid + 0.5
    xmin, xmax, ymin, ymax = xmin - margin, xmax + margin, ymin - margin, ymax + margin
    width = xmax - xmin
    height = ymax - ymin
    stroke = _g(min(width, height) / 800)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{_g(xmin)} {_g(-ymax)} {_g(width)} {_g(height)}" '
        f'data-case={quoteattr(p.case)} data-elements="{len(p.elements)}">',
        f'<g fill="none" stroke="black" stroke-width="{stroke}">',
    ]
    for f in flats:
        (px, py), (nx, ny) = f.line["point"], f.line["normal"]
        # direction along the line is the normal turned by 90 degrees
        dx, dy = -ny, nx
        span = 2 * (width + height)
        x1, y1 = px - span * dx, py - span * dy
        x2, y2 = px + span * dx, py + span * dy
        lines.append(
            f'<line x1="{_g(x1)}" y1="{_g(-y1)}" x2="{_g(x2)}" y2="{_g(-y2)}" '
            f'data-normal="{" ".join(map(str, f.normal))}"/>'
        )
    for c in circles:
        lines.append(
            f'<circle cx="{_g(c.center[0])}" cy="{_g(-c.center[1])}" r="{_g(c.radius)}" '
            f'data-normal="{" ".join(map(str, c.normal))}"/>'
        )
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
