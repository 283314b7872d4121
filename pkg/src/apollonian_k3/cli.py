"""Command line interface.

Exit codes: 0 ok, 1 verification failure, 2 configuration or input error,
3 budget exhaustion.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .config import CaseConfig, ConfigError, builtin_config, load_config, parse_config
from .counting import (
    DELTA_APOLLONIAN,
    ChamberError,
    CountBudgetExceeded,
    CountingError,
    chamber_search,
    count_by_curvature,
    count_orbital,
    fit_exponent,
    synthetic_series,
)
from .export import SchemaError, dumps, packing_to_dict, packing_to_svg, verify_json
from .geometry import GeometryError
from .group import (
    ConstraintError,
    GeneratorSet,
    GroupError,
    OrbitBudgetExceeded,
    higher_dim_membership,
    validate_generators,
)
from .lattice import LatticeError, pair, reflection_matrix, signature
from .packings import GeneratorValidationError, PackingError, build_packing, reconstruct_gram, resolve_case

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3
FORMATS = ("svg", "json", "csv", "text")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    case: str | None = None
    config_path: str | None = None
    m: int | None = None
    max_depth: int | None = None
    max_curvature: float | None = None
    max_elements: int = 2_000_000
    fmt: str = "text"
    normalize: str = "strip"
    fit_range: tuple[float, float] | None = None
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.fmt not in FORMATS:
            raise UsageError(f"format must be one of {', '.join(FORMATS)}")
        for name in ("max_depth", "max_curvature"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise UsageError(f"{name} must be nonnegative")
        if self.max_elements <= 0 or self.workers <= 0:
            raise UsageError("max_elements and workers must be positive")
        if self.fit_range is not None and not 0 < self.fit_range[0] < self.fit_range[1]:
            raise UsageError("fit range must satisfy 0 < low < high")

    def case_config(self):
        if self.config_path:
            return load_config(self.config_path)
        return builtin_config(self.case or "circle")


def _out(text: str, path: str | None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _matrix(rows) -> str:
    w = max(len(str(x)) for r in rows for x in r)
    return "\n".join("  " + " ".join(str(x).rjust(w) for x in r) for r in rows)


# --------------------------------------------------------------------------
# lattice info


def _generator_lines(gs: GeneratorSet) -> list[str]:
    rep = validate_generators(gs)
    out = []
    for c in rep.checks:
        verdict = "integral" if c.integral else "NOT integral"
        extra = f"  ({c.note})" if c.note else ""
        out.append(f"  {c.name:<4} {str(list(c.normal)):<22} self-pairing {c.self_pairing:>4}  {verdict}{extra}")
    return out


def cmd_lattice_info(rc: RunConfig) -> int:
    cfg = rc.case_config()
    lines = []
    if cfg.family == "all-tangent":
        ms = [rc.m] if rc.m is not None else list(range(2, 9))
        m0 = ms[0]
        ctx = resolve_case(cfg, m=m0).ctx
        lines.append(f"case: {cfg.name} (m = {m0}, rank {ctx.dim})")
        lines.append("gram:")
        lines.append(_matrix(ctx.gram))
        lines.append(f"signature: {signature(ctx)}")
        for m in ms:
            n = [1] * (m + 1) + [1 - m]
            verdict = higher_dim_membership(m)
            lines.append(f"m = {m}: n = {n}, reflection in O+: {'yes' if verdict else 'no'}")
        _out("\n".join(lines) + "\n", None)
        return EXIT_OK
    res = resolve_case(cfg)
    ctx = res.ctx
    lines.append(f"case: {cfg.name} (rank {ctx.dim}, cusp e{ctx.cusp_index + 1})" if ctx.cusp_index is not None
                 else f"case: {cfg.name} (rank {ctx.dim})")
    lines.append("gram:")
    lines.append(_matrix(ctx.gram))
    lines.append(f"signature: {signature(ctx)}")
    try:
        reconstruct_gram(cfg)
        lines.append("gram rebuilt from the incidence rules: match")
    except ConfigError as exc:
        lines.append(f"gram rebuilt from the incidence rules: MISMATCH ({exc})")
    if cfg.printed_gamma:
        lines.append("printed walls:")
        lines.extend(_generator_lines(res.printed_gamma()))
    if cfg.gamma:
        lines.append("solved walls (used for the packing):")
        lines.extend(_generator_lines(res.gamma()))
    if cfg.face:
        f = res.face
        lines.append(f"face {cfg.face}: {list(f)} self-pairing {pair(ctx, f, f)}")
    for name, v in cfg.candidates.items():
        nn = pair(ctx, v, v)
        integral = nn != 0 and reflection_matrix(ctx, v).integral
        verdict = "accepted" if integral else "rejected: reflection is not integral"
        lines.append(f"candidate {name} = {list(v)} self-pairing {nn}: {verdict}")
    if res.discrepancies:
        lines.append("discrepancies:")
        for d in res.discrepancies:
            lines.append(f"  {d.name}: {d.message}")
    _out("\n".join(lines) + "\n", None)
    return EXIT_OK


# --------------------------------------------------------------------------
# gen / verify


def cmd_gen(rc: RunConfig, output: str | None, force: bool, printed: bool) -> int:
    cfg = rc.case_config()
    if rc.max_depth is None and rc.max_curvature is None:
        default = cfg.settings.get("gen_max_curvature")
        rc.max_curvature = float(default) if default else 20.0
    res = resolve_case(cfg)
    if rc.fmt == "svg" and res.ctx.dim != 4:
        raise UsageError("SVG output is only available for the circle case; use --format json")
    p = build_packing(
        res,
        max_depth=rc.max_depth,
        max_curvature=rc.max_curvature,
        max_elements=rc.max_elements,
        strict=True,
        workers=rc.workers,
        printed=printed,
    )
    rep = p.verification
    if not rep.ok and not force:
        for line in rep.problems():
            print(line, file=sys.stderr)
        print("verification failed; nothing written (use --force to write anyway)", file=sys.stderr)
        return EXIT_VERIFY
    gs = res.printed_gamma() if printed else res.gamma()
    budget = {"max_depth": rc.max_depth, "max_curvature": rc.max_curvature, "max_elements": rc.max_elements}
    if rc.fmt == "svg":
        text = packing_to_svg(p)
    elif rc.fmt == "json":
        text = dumps(packing_to_dict(p, gs, budget))
    else:
        raise UsageError("gen writes svg or json")
    _out(text, output)
    if output:
        print(f"wrote {len(p)} elements to {output} (verification {'passed' if rep.ok else 'FAILED'})", file=sys.stderr)
    return EXIT_OK if rep.ok else EXIT_VERIFY


def cmd_verify(path: str) -> int:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    rep, problems = verify_json(text)
    summary = rep.summary()
    summary["ok"] = rep.ok and not problems
    print(json.dumps(summary, sort_keys=True))
    for line in problems:
        print(line)
    return EXIT_OK if summary["ok"] else EXIT_VERIFY


# --------------------------------------------------------------------------
# count


def cmd_count(rc: RunConfig, mode: str, tmax: float | None, bmax: float | None, csv_path, json_path, self_test) -> int:
    summary: dict = {"reference_delta": DELTA_APOLLONIAN}
    csv_parts = []
    if self_test:
        s = synthetic_series()
        fit = fit_exponent(s, rc.fit_range or (10.0, 1e4))
        summary["self_test"] = fit.summary(reference=2.0)
        csv_parts.append(s.to_csv())
        ok = abs(fit.delta_hat - 2) <= 0.01
        print(f"self-test: delta_hat = {fit.delta_hat:.6f} on floor(t^2) (expected 2 +- 0.01): {'ok' if ok else 'FAILED'}")
        _write_count(csv_parts, summary, csv_path, json_path)
        return EXIT_OK if ok else EXIT_VERIFY
    cfg = rc.case_config()
    res = resolve_case(cfg)
    ref = float(cfg.settings["reference_delta"]) if "reference_delta" in cfg.settings else None
    summary["reference_delta"] = ref
    ref_text = f"reference delta = {ref}" if ref is not None else "no reference delta for this case"
    if tmax is None:
        tmax = float(cfg.settings.get("count_tmax", 1000))
    fit_range = rc.fit_range
    if fit_range is None and "count_fit" in cfg.settings:
        lo, hi = cfg.settings["count_fit"].split(":")
        fit_range = (float(lo), float(hi))
    if fit_range is None:
        fit_range = (tmax / 10, tmax)
    if mode in ("curvature", "both"):
        s = count_by_curvature(res, tmax, workers=rc.workers, max_elements=rc.max_elements)
        fit = fit_exponent(s, fit_range)
        summary["curvature"] = fit.summary(reference=ref)
        summary["curvature"]["elements"] = s.meta["elements"]
        csv_parts.append(s.to_csv(header=not csv_parts))
        print(f"curvature: N({tmax:g}) = {s.counts[-1]}, delta_hat = {fit.delta_hat:.6f} "
              f"over [{fit_range[0]:g}, {fit_range[1]:g}], {ref_text}")
    if mode in ("orbital", "both"):
        gs = res.gamma()
        verdict = chamber_search(res.ctx, gs, res.face)
        if not verdict.ok:
            raise ChamberError(verdict.reason)
        if bmax is None:
            bmax = 4 * tmax
        s = count_orbital(res.ctx, gs, res.seed, verdict.D, bmax, face=res.face,
                          workers=rc.workers, max_elements=rc.max_elements)
        orange = (bmax / 10, bmax)
        fit = fit_exponent(s, orange)
        summary["orbital"] = fit.summary(reference=ref)
        summary["orbital"].update({"D": list(verdict.D), "elements": s.meta["elements"],
                                   "descent_violations": s.meta.get("descent_violations")})
        csv_parts.append(s.to_csv(header=not csv_parts))
        print(f"orbital: D = {list(verdict.D)}, N(C, D, {bmax:g}) = {s.counts[-1]}, "
              f"delta_hat = {fit.delta_hat:.6f} over [{orange[0]:g}, {orange[1]:g}], {ref_text}")
    _write_count(csv_parts, summary, csv_path, json_path)
    return EXIT_OK


def _write_count(csv_parts, summary, csv_path, json_path):
    if csv_path:
        Path(csv_path).write_text("".join(csv_parts))
    text = json.dumps(summary, sort_keys=True, indent=1) + "\n"
    if json_path:
        Path(json_path).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# derive-normals


def cmd_derive(rc: RunConfig, constraints: str | None) -> int:
    cfg = rc.case_config()
    skip = 0
    if constraints:
        try:
            text = Path(constraints).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {constraints}: {exc}") from exc
        extra = parse_config(text, constraints, fragment=True)
        if not extra.derivations:
            raise UsageError(f"{constraints} has no 'derive' or 'null' lines")
        if extra.gram is not None:
            # a self-contained problem: its own lattice, no case vectors
            cfg = CaseConfig(name=constraints, gram=extra.gram, cusp_index=extra.cusp_index,
                             vectors=extra.vectors, printed=extra.printed, derivations=extra.derivations)
        else:
            # solve after the case's own derivations so their names can be used
            skip = len(cfg.derivations)
            cfg.derivations = cfg.derivations + extra.derivations
            cfg.printed.update(extra.printed)
            cfg.vectors.update(extra.vectors)
    res = resolve_case(cfg, m=rc.m) if cfg.family else resolve_case(cfg)
    ctx = res.ctx
    for d in res.derived[skip:]:
        cons = ", ".join(d.constraints)
        if d.vector is None:
            if d.solutions:
                basis = ", ".join(str(list(v)) for v in d.solutions)
                print(f"{d.kind} {d.name}: {cons} -> solution space of dimension {len(d.solutions)}: {basis}")
            else:
                print(f"{d.kind} {d.name}: {cons} -> {d.error or 'no solution'}")
            continue
        nn = pair(ctx, d.vector, d.vector)
        tag = ""
        if d.kind == "derive" and nn != 0:
            tag = "integral" if reflection_matrix(ctx, d.vector).integral else "not integral"
        printed = ""
        if d.printed is not None:
            printed = "  printed: " + ("same" if d.matches_printed else str(list(d.printed)))
        print(f"{d.kind} {d.name}: {cons} -> {list(d.vector)}  self-pairing {nn} {tag}{printed}".rstrip())
    return EXIT_OK


# --------------------------------------------------------------------------


def _fit_range(text):
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError("expected LOW:HIGH") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="apollonian-k3", description="Apollonian packings from Lorentzian lattices")
    sub = ap.add_subparsers(dest="command", required=True)

    def case_args(p):
        p.add_argument("--case", choices=("circle", "sphere", "dim"), default=None)
        p.add_argument("--config", help="case file (overrides --case)")
        p.add_argument("--m", type=int, default=None, help="dimension parameter for --case dim")

    lat = sub.add_parser("lattice", help="lattice reports")
    lsub = lat.add_subparsers(dest="lattice_command", required=True)
    info = lsub.add_parser("info", help="Gram matrix, signature and wall checks")
    case_args(info)

    gen = sub.add_parser("gen", help="generate and verify a packing")
    case_args(gen)
    gen.add_argument("--max-depth", type=int)
    gen.add_argument("--max-curvature", type=float)
    gen.add_argument("--max-elements", type=int, default=2_000_000)
    gen.add_argument("--format", choices=("svg", "json"), default="json")
    gen.add_argument("-o", "--output")
    gen.add_argument("--workers", type=int, default=1)
    gen.add_argument("--force", action="store_true", help="write output even if verification fails")
    gen.add_argument("--printed", action="store_true", help="use the printed wall tuples")

    ver = sub.add_parser("verify", help="re-verify a JSON packing")
    ver.add_argument("file")

    cnt = sub.add_parser("count", help="curvature or orbital counts and exponent fit")
    case_args(cnt)
    cnt.add_argument("--mode", choices=("curvature", "orbital", "both"), default="curvature")
    cnt.add_argument("--tmax", type=float)
    cnt.add_argument("--bmax", type=float)
    cnt.add_argument("--fit", type=_fit_range)
    cnt.add_argument("--csv")
    cnt.add_argument("--json")
    cnt.add_argument("--workers", type=int, default=1)
    cnt.add_argument("--max-elements", type=int, default=5_000_000)
    cnt.add_argument("--self-test", action="store_true", help="fit the synthetic series floor(t^2)")

    der = sub.add_parser("derive-normals", help="solve wall normals and null points")
    case_args(der)
    der.add_argument("--constraints", help="file with 'derive NAME: v1, v2' and 'null NAME: ...' lines")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        rc = RunConfig(
            case=getattr(args, "case", None),
            config_path=getattr(args, "config", None),
            m=getattr(args, "m", None),
            max_depth=getattr(args, "max_depth", None),
            max_curvature=getattr(args, "max_curvature", None),
            max_elements=getattr(args, "max_elements", 2_000_000),
            fmt=getattr(args, "format", "text"),
            fit_range=getattr(args, "fit", None),
            workers=getattr(args, "workers", 1),
        )
        if args.command == "lattice":
            return cmd_lattice_info(rc)
        if args.command == "gen":
            return cmd_gen(rc, args.output, args.force, args.printed)
        if args.command == "verify":
            return cmd_verify(args.file)
        if args.command == "count":
            return cmd_count(rc, args.mode, args.tmax, args.bmax, args.csv, args.json, args.self_test)
        if args.command == "derive-normals":
            return cmd_derive(rc, args.constraints)
    except GeneratorValidationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (OrbitBudgetExceeded, CountBudgetExceeded) as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, ConfigError, SchemaError, LatticeError, ConstraintError, GeometryError,
            ChamberError, PackingError, CountingError, GroupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
