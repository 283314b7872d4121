import dataclasses

import pytest

from apollonian_k3.config import ConfigError, builtin_config, eval_vector, load_config, parse_config
from apollonian_k3.lattice import all_tangent_gram

MINIMAL = """
name = toy
cusp = e4
gram:
 -2 2 2 4
  2 -2 2 4
  2 2 -2 0
  4 4 0 0
end
vector L = e4 - e3   # trailing comment
printed n2 = 0, 0, 2, -1
derive n2 (norm -8): e1, e2, e4
null P: e1, e2
gamma = n2
extra_setting = 17
"""


def test_parse_minimal():
    cfg = parse_config(MINIMAL)
    assert cfg.name == "toy" and cfg.cusp_index == 3 and cfg.dim == 4
    assert cfg.vectors == {"L": "e4 - e3"}
    assert cfg.printed["n2"] == (0, 0, 2, -1)
    d = cfg.derivations[0]
    assert (d.kind, d.name, d.constraints, d.norm) == ("derive", "n2", ("e1", "e2", "e4"), -8)
    assert cfg.derivations[1].kind == "null"
    assert cfg.gamma == ("n2",)
    assert cfg.settings["extra_setting"] == "17"
    assert cfg.context().cusp == (0, 0, 0, 1)


@pytest.mark.parametrize(
    "text, match",
    [
        ("cusp = e4\ngram:\n-2\nend", "name"),
        ("name = x\n", "gram"),
        ("name = x\ngram:\n-2 0\n", "unterminated"),
        ("name = x\ngram:\nend", "empty"),
        ("name = x\ngram:\n-2 0\n0\nend", "square"),
        ("name = x\ngram:\n-2 a\nend", "integers"),
        ("name = x\ncusp = four\ngram:\n0\nend", "basis label"),
        ("name = x\ngram:\n0\nend\ncusp = e3", "range"),
        ("name = x\nwhat is this", "cannot parse"),
        ("name = x\nderive n1 e1, e2", "derive NAME"),
        ("name = x\nderive n1:", "no constraints"),
        ("name = x\nprinted n1 1 2", "printed NAME"),
        ("name = x\ngram:\n0\nend\nprinted n1 = 1 2", "entries"),
        ("name = x\nfamily = spheres", "family"),
        ("name = x\nm = two", "integer"),
    ],
)
def test_parse_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_fragment_allows_missing_header():
    cfg = parse_config("derive n1: e1, e3\nnull P: e1, e2\n", fragment=True)
    assert cfg.name == "" and cfg.gram is None and len(cfg.derivations) == 2


def test_eval_vector():
    names = {"e1": (1, 0, 0), "e2": (0, 1, 0), "P": (1, 1, 0)}
    assert eval_vector("e1 - 2*e2 + P", names, 3) == (2, -1, 0)
    assert eval_vector("-e1+3e2", names, 3) == (-1, 3, 0)
    assert eval_vector("[1, 2, 3]", names, 3) == (1, 2, 3)
    with pytest.raises(ConfigError):
        eval_vector("e1 + Q", names, 3)
    with pytest.raises(ConfigError):
        eval_vector("1 2", names, 3)
    with pytest.raises(ConfigError):
        eval_vector("e1 ** e2", names, 3)


def test_builtins():
    for name in ("circle", "sphere", "jfamily", "dim"):
        cfg = builtin_config(name)
        assert cfg.name in ("circle", "sphere", "jfamily")
    with pytest.raises(ConfigError):
        builtin_config("torus")


def test_family_with_m():
    fam = builtin_config("dim")
    cfg = fam.with_m(5)
    assert cfg.gram == all_tangent_gram(7) and cfg.m == 5
    assert fam.m == 2
    with pytest.raises(ConfigError):
        builtin_config("circle").with_m(3)
    with pytest.raises(ConfigError):
        fam.with_m(0)


def test_context_errors():
    cfg = parse_config(MINIMAL)
    bad = dataclasses.replace(cfg, gram=((-2, 0), (0, -2)), cusp_index=None)
    with pytest.raises(ConfigError):
        bad.context()


def test_load_config(tmp_path):
    p = tmp_path / "toy.cfg"
    p.write_text(MINIMAL)
    assert load_config(p).name == "toy"
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
