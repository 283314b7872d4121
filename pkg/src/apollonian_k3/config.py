"""Plain-text lattice case files.

A case file is a list of ``key = value`` lines plus a ``gram:`` block::

    name = circle
    cusp = e4
    face = e3
    gram:
      -2  2  2  4
      ...
    end
    vector L = e4 - e3
    printed n1 = -1 1 0 1
    derive n1: e1, e3, e4
    null P: e1, e2
    gamma = n1 n2 n3 n4

Vector expressions are integer tuples or signed sums of named vectors
(``e2+e3``, ``e5 - e4``, ``2e1``).  ``derive`` solves for the wall normal
orthogonal to the listed vectors, ``null`` for a null vector.  Lines
starting with ``#`` are comments.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .exact import IntVector
from .lattice import GramContext, LatticeError, all_tangent_gram

BUILTIN = ("circle", "sphere", "jfamily")


class ConfigError(ValueError):
    pass


@dataclass
class Derivation:
    kind: str  # "derive" or "null"
    name: str
    constraints: tuple[str, ...]
    norm: int | None = None
    line: int = 0


@dataclass
class CaseConfig:
    name: str
    gram: tuple[tuple[int, ...], ...] | None
    cusp_index: int | None = None
    face: str | None = None
    seed: str | None = None
    vectors: dict[str, str] = field(default_factory=dict)
    printed: dict[str, IntVector] = field(default_factory=dict)
    candidates: dict[str, IntVector] = field(default_factory=dict)
    derivations: list[Derivation] = field(default_factory=list)
    # orthogonality stated for a printed vector, checked but not solved
    claims: list[Derivation] = field(default_factory=list)
    gamma: tuple[str, ...] = ()
    printed_gamma: tuple[str, ...] = ()
    rules: dict[str, str] = field(default_factory=dict)
    family: str | None = None
    m: int | None = None
    settings: dict[str, str] = field(default_factory=dict)
    source: str = ""

    @property
    def dim(self) -> int:
        if self.gram is None:
            raise ConfigError("case has no Gram matrix yet")
        return len(self.gram)

    def context(self, check: bool = True) -> GramContext:
        if self.gram is None:
            raise ConfigError(f"case {self.name!r} has no Gram matrix")
        try:
            return GramContext(self.gram, self.cusp_index, name=self.name, _check=check)
        except LatticeError as exc:
            raise ConfigError(str(exc)) from exc

    def with_m(self, m: int) -> CaseConfig:
        """Instantiate a family case for a specific ``m``."""
        if self.family != "all-tangent":
            raise ConfigError(f"case {self.name!r} is not a family")
        if m < 1:
            raise ConfigError("m must be positive")
        out = CaseConfig(**{**self.__dict__})
        out.m = m
        out.gram = all_tangent_gram(m + 2)
        return out


_INT = re.compile(r"^-?\d+$")
_TERM = re.compile(r"([+-]?)\s*(\d*)\s*\*?\s*([A-Za-z_][A-Za-z_0-9]*)")


def _ints(text: str, line: int) -> IntVector:
    parts = text.replace(",", " ").replace("[", " ").replace("]", " ").split()
    if not parts or not all(_INT.match(p) for p in parts):
        raise ConfigError(f"line {line}: expected integers, got {text!r}")
    return tuple(int(p) for p in parts)


def eval_vector(expr: str, names: dict[str, IntVector], dim: int) -> IntVector:
    """Evaluate an integer tuple or a signed sum of named vectors."""
    expr = expr.strip()
    if re.fullmatch(r"[\[\]\s,\-\d]+", expr):
        v = _ints(expr, 0)
        if len(v) != dim:
            raise ConfigError(f"vector {expr!r} has {len(v)} entries, expected {dim}")
        return v
    pos = 0
    out = [0] * dim
    compact = expr.replace(" ", "")
    while pos < len(compact):
        mt = _TERM.match(compact, pos)
        if not mt or mt.start() != pos:
            raise ConfigError(f"cannot parse vector expression {expr!r}")
        sign = -1 if mt.group(1) == "-" else 1
        coef = int(mt.group(2)) if mt.group(2) else 1
        name = mt.group(3)
        if name not in names:
            raise ConfigError(f"unknown vector {name!r} in {expr!r}")
        for i, x in enumerate(names[name]):
            out[i] += sign * coef * x
        pos = mt.end()
    return tuple(out)


def parse_config(text: str, source: str = "<string>", fragment: bool = False) -> CaseConfig:
    """Parse a case file.  A ``fragment`` may omit the name and the Gram matrix."""
    cfg = CaseConfig(name="", gram=None, source=source)
    rows: list[IntVector] | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if rows is not None:
            if line == "end":
                if not rows:
                    raise ConfigError(f"line {lineno}: empty gram block")
                cfg.gram = tuple(rows)
                rows = None
            else:
                rows.append(_ints(line, lineno))
            continue
        if line == "gram:":
            rows = []
            continue
        head, _, rest = line.partition(" ")
        if head in ("derive", "null", "claim"):
            name, sep, cons = rest.partition(":")
            if not sep:
                raise ConfigError(f"line {lineno}: expected '{head} NAME: v1, v2, ...'")
            name = name.strip()
            norm = None
            mt = re.fullmatch(r"(\w+)\s*\(norm\s*(-?\d+)\)", name)
            if mt:
                name, norm = mt.group(1), int(mt.group(2))
            items = tuple(c.strip() for c in cons.split(",") if c.strip())
            if not items:
                raise ConfigError(f"line {lineno}: no constraints for {name}")
            (cfg.claims if head == "claim" else cfg.derivations).append(Derivation(head, name, items, norm, lineno))
            continue
        if head in ("vector", "printed", "candidate"):
            name, sep, value = rest.partition("=")
            if not sep:
                raise ConfigError(f"line {lineno}: expected '{head} NAME = ...'")
            name = name.strip()
            if head == "vector":
                cfg.vectors[name] = value.strip()
            elif head == "printed":
                cfg.printed[name] = _ints(value, lineno)
            else:
                cfg.candidates[name] = _ints(value, lineno)
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: cannot parse {raw!r}")
        key, value = key.strip(), value.strip()
        if key == "name":
            cfg.name = value
        elif key == "cusp":
            cfg.cusp_index = _basis_index(value, lineno)
        elif key == "face":
            cfg.face = value
        elif key == "seed":
            cfg.seed = value
        elif key == "gamma":
            cfg.gamma = tuple(value.split())
        elif key == "printed_gamma":
            cfg.printed_gamma = tuple(value.split())
        elif key.startswith("rule_"):
            cfg.rules[key[5:]] = value
        elif key == "family":
            cfg.family = value
        elif key == "m":
            if not _INT.match(value):
                raise ConfigError(f"line {lineno}: m must be an integer")
            cfg.m = int(value)
        else:
            cfg.settings[key] = value
    if rows is not None:
        raise ConfigError("unterminated gram block (missing 'end')")
    if fragment:
        return cfg
    if not cfg.name:
        raise ConfigError("case file must set 'name'")
    if cfg.family is not None:
        if cfg.family != "all-tangent":
            raise ConfigError(f"unknown family {cfg.family!r}")
        if cfg.m is not None and cfg.gram is None:
            cfg.gram = all_tangent_gram(cfg.m + 2)
    elif cfg.gram is None:
        raise ConfigError("case file has no gram block")
    if cfg.gram is not None:
        k = len(cfg.gram)
        if any(len(r) != k for r in cfg.gram):
            raise ConfigError("gram block is not square")
        if cfg.cusp_index is not None and cfg.cusp_index >= k:
            raise ConfigError("cusp index out of range")
        for name, v in list(cfg.printed.items()) + list(cfg.candidates.items()):
            if len(v) != k:
                raise ConfigError(f"vector {name} has {len(v)} entries, expected {k}")
    return cfg


def _basis_index(value: str, lineno: int) -> int:
    mt = re.fullmatch(r"e(\d+)", value.strip())
    if not mt or int(mt.group(1)) < 1:
        raise ConfigError(f"line {lineno}: expected a basis label like e4, got {value!r}")
    return int(mt.group(1)) - 1


def load_config(path) -> CaseConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, str(path))


def builtin_config(name: str) -> CaseConfig:
    if name == "dim":
        name = "jfamily"
    if name not in BUILTIN:
        raise ConfigError(f"unknown built-in case {name!r}; choose from {', '.join(BUILTIN)}")
    text = resources.files("apollonian_k3").joinpath("data", f"{name}.cfg").read_text()
    return parse_config(text, f"<builtin {name}>")
