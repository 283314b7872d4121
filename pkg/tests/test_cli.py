import json
import math
import xml.etree.ElementTree as ET
from fractions import Fraction

import pytest

from apollonian_k3.cli import RunConfig, UsageError, main
from apollonian_k3.export import SchemaError, dumps, packing_from_dict, packing_to_dict, packing_to_svg, verify_json
from apollonian_k3.geometry import curvature_sq
from apollonian_k3.packings import build_packing

SVG = "{http://www.w3.org/2000/svg}"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_lattice_info_circle(capsys):
    code, out, _ = run(capsys, "lattice", "info", "--case", "circle")
    assert code == 0
    for row in ("-2  2  2  4", " 2 -2  2  4", " 2  2 -2  0", " 4  4  0  0"):
        assert row in out
    assert "candidate n5 = [2, -2, 0, 1] self-pairing -32: rejected" in out
    assert "signature: (1, 3, 0)" in out
    assert "n4: printed [1, 0, -1, 1] is a null vector" in out


def test_lattice_info_sphere(capsys):
    code, out, _ = run(capsys, "lattice", "info", "--case", "sphere")
    assert code == 0
    printed = out.split("printed walls:")[1].split("solved walls")[0]
    norms = [int(line.split("self-pairing")[1].split()[0]) for line in printed.strip().splitlines()]
    assert norms == [-8, -8, -24, -8, -24]


def test_lattice_info_family(capsys):
    code, out, _ = run(capsys, "lattice", "info", "--case", "dim", "--m", "4")
    assert code == 0 and "reflection in O+: no" in out
    code, out, _ = run(capsys, "lattice", "info", "--case", "dim")
    verdicts = [line.endswith("yes") for line in out.splitlines() if line.startswith("m = ")]
    assert verdicts == [True, True] + [False] * 5


def _svg(text):
    root = ET.fromstring(text)
    return root.findall(f".//{SVG}circle"), root.findall(f".//{SVG}line")


def test_gen_depth_zero_svg(tmp_path, capsys):
    out = tmp_path / "d0.svg"
    code, _, _ = run(capsys, "gen", "--case", "circle", "--max-depth", "0", "--format", "svg", "-o", str(out))
    assert code == 0
    circles, lines = _svg(out.read_text())
    assert len(lines) == 1 and not circles


def test_svg_radii(tmp_path, capsys):
    out = tmp_path / "c.svg"
    code, _, _ = run(capsys, "gen", "--case", "circle", "--max-curvature", "60", "--format", "svg", "-o", str(out))
    assert code == 0
    circles, lines = _svg(out.read_text())
    assert len(lines) == 2
    p = build_packing("circle", max_depth=0, verify=False)
    for c in circles:
        n = tuple(int(x) for x in c.get("data-normal").split())
        k = math.sqrt(curvature_sq(p.ctx, p.chart.E, n) / p.chart.scale_sq)
        assert float(c.get("r")) == pytest.approx(1 / k, rel=1e-8, abs=1e-9)


def test_svg_needs_circles(capsys):
    code, _, err = run(capsys, "gen", "--case", "sphere", "--max-depth", "1", "--format", "svg")
    assert code == 2 and "json" in err
    p = build_packing("sphere", max_depth=1, verify=False)
    with pytest.raises(Exception):
        packing_to_svg(p)


def test_gen_depth_six_json(tmp_path, capsys):
    out = tmp_path / "d6.json"
    code, _, _ = run(capsys, "gen", "--case", "circle", "--max-depth", "6", "-o", str(out))
    assert code == 0
    data = json.loads(out.read_text())
    p = build_packing("circle", max_depth=6)
    assert len(data["elements"]) == len(p.record)
    e = data["elements"][1]
    assert {"normal", "curvature_sq", "curvature", "word"} <= set(e)
    assert "scale" in data["chart"]


def test_json_round_trip():
    for case, kw in (("circle", {"max_curvature": 80}), ("sphere", {"max_curvature": 20})):
        p = build_packing(case, **kw)
        data = json.loads(dumps(packing_to_dict(p, None)))
        q, problems = packing_from_dict(data)
        assert not problems
        assert q.normals == p.normals
        assert [e.curvature_sq for e in q.elements] == [e.curvature_sq for e in p.elements]
        rep, probs = verify_json(dumps(packing_to_dict(p, _gens(case))))
        assert not probs and rep.summary() == p.verification.summary()


def _gens(case):
    from apollonian_k3.packings import resolve_case

    return resolve_case(case).gamma()


def test_json_exact_rationals():
    p = build_packing("circle", max_curvature=30)
    data = packing_to_dict(p)
    for el, e in zip(data["elements"], p.elements):
        assert Fraction(el["curvature_sq"]["num"], el["curvature_sq"]["den"]) == e.curvature_sq


def test_verify_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.json"
    assert run(capsys, "gen", "--case", "circle", "--max-curvature", "40", "-o", str(good))[0] == 0
    code, out, _ = run(capsys, "verify", str(good))
    assert code == 0 and json.loads(out.splitlines()[0])["ok"]

    data = json.loads(good.read_text())
    data["elements"][5]["normal"][0] += 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    code, out, _ = run(capsys, "verify", str(bad))
    assert code == 1 and "element 5" in out

    data = json.loads(good.read_text())
    for el in data["elements"]:
        del el["normal"]
    floaty = tmp_path / "floaty.json"
    floaty.write_text(json.dumps(data))
    code, _, err = run(capsys, "verify", str(floaty))
    assert code == 2 and "normal" in err

    data = json.loads(good.read_text())
    data["gram"][0][3] = 3
    data["gram"][3][0] = 3
    mism = tmp_path / "gram.json"
    mism.write_text(json.dumps(data))
    code, _, err = run(capsys, "verify", str(mism))
    assert code == 2 and "Gram" in err

    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    assert run(capsys, "verify", str(junk))[0] == 2
    assert run(capsys, "verify", str(tmp_path / "missing.json"))[0] == 2


def test_verify_catches_swapped_words(tmp_path, capsys):
    good = tmp_path / "good.json"
    run(capsys, "gen", "--case", "circle", "--max-curvature", "40", "-o", str(good))
    data = json.loads(good.read_text())
    els = data["elements"]
    els[3]["normal"], els[4]["normal"] = els[4]["normal"], els[3]["normal"]
    swap = tmp_path / "swap.json"
    swap.write_text(json.dumps(data))
    code, out, _ = run(capsys, "verify", str(swap))
    assert code == 1 and "element 3" in out and "element 4" in out


def test_schema_errors():
    with pytest.raises(SchemaError):
        packing_from_dict([])
    with pytest.raises(SchemaError):
        packing_from_dict({"case": "circle"})
    with pytest.raises(SchemaError):
        verify_json("[1, 2")


def test_determinism_across_workers(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "gen", "--case", "sphere", "--max-curvature", "20", "--workers", "1", "-o", str(a))
    run(capsys, "gen", "--case", "sphere", "--max-curvature", "20", "--workers", "3", "-o", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_budget_exit_code(capsys):
    code, _, err = run(capsys, "gen", "--case", "circle", "--max-curvature", "100", "--max-elements", "5")
    assert code == 3 and "budget" in err
    code, _, _ = run(capsys, "count", "--tmax", "1000", "--max-elements", "50")
    assert code == 3


def test_printed_generators_fail_verification(capsys):
    code, _, err = run(capsys, "gen", "--case", "circle", "--max-depth", "2", "--printed")
    assert code == 1 and "n4" in err


def test_count_self_test(tmp_path, capsys):
    js = tmp_path / "s.json"
    code, out, _ = run(capsys, "count", "--self-test", "--json", str(js))
    assert code == 0 and "ok" in out
    assert json.loads(js.read_text())["self_test"]["delta_hat"] == pytest.approx(2.0, abs=0.01)


def test_count_modes(tmp_path, capsys):
    csv = tmp_path / "c.csv"
    code, out, _ = run(capsys, "count", "--mode", "both", "--tmax", "1000", "--fit", "100:1000", "--csv", str(csv))
    assert code == 0
    summary = json.loads(out[out.index("{"):])
    assert summary["reference_delta"] == pytest.approx(1.305688)
    assert abs(summary["curvature"]["delta_hat"] - summary["orbital"]["delta_hat"]) < 0.1
    assert summary["orbital"]["descent_violations"] == 0
    rows = csv.read_text().splitlines()
    assert rows[0] == "mode,threshold,count"
    assert {r.split(",")[0] for r in rows[1:]} == {"curvature", "intersection"}


def test_derive_normals(tmp_path, capsys):
    code, out, _ = run(capsys, "derive-normals", "--case", "circle")
    assert code == 0
    assert "derive n4: e2, e3, n1 -> [1, 0, 1, -1]  self-pairing -8 integral  printed: [1, 0, -1, 1]" in out
    cons = tmp_path / "c.txt"
    cons.write_text("gram:\n-2 2 2 4\n2 -2 2 4\n2 2 -2 0\n4 4 0 0\nend\nnull P: e1, e2\nderive n: e3, e4, P\n")
    code, out, _ = run(capsys, "derive-normals", "--constraints", str(cons))
    assert code == 0
    assert out.splitlines() == [
        "null P: e1, e2 -> [1, 1, 0, 0]  self-pairing 0",
        "derive n: e3, e4, P -> [1, -1, 0, 0]  self-pairing -8 integral",
    ]
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n")
    assert run(capsys, "derive-normals", "--constraints", str(empty))[0] == 2


def test_config_file_and_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("name = broken\ngram:\n-2 0\n0 -2\nend\n")
    code, _, err = run(capsys, "lattice", "info", "--config", str(bad))
    assert code == 2 and "signature" in err
    assert run(capsys, "lattice", "info", "--config", str(tmp_path / "nope.cfg"))[0] == 2


def test_run_config_validation():
    with pytest.raises(UsageError):
        RunConfig(fmt="png")
    with pytest.raises(UsageError):
        RunConfig(max_depth=-1)
    with pytest.raises(UsageError):
        RunConfig(workers=0)
    with pytest.raises(UsageError):
        RunConfig(fit_range=(10.0, 1.0))
