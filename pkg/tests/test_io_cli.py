import csv
import json
import re
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import ATTRACTOR, two_foci
from quadlienard.cli import detuned, main, reduce_system
from quadlienard.errors import ParseError
from quadlienard.io import dumps, format_weighted, lienard_from_dict, lienard_to_dict, parse_system
from quadlienard.numerics import CycleSearchOptions, find_cycles
from quadlienard.reduction import COEFF_NAMES, QuadraticSystem, to_lienard

HARMONIC = {k: 0.0 for k in COEFF_NAMES} | {"beta1": 1.0, "alpha2": -1.0}


def write(tmp_path, data, name="in.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return str(p)


# -- parsing and serialization ----------------------------------------------


def test_parse_round_trip():
    s, eps = parse_system(json.dumps(ATTRACTOR.to_dict() | {"epsilon": -0.02}))
    assert s == ATTRACTOR and eps == -0.02


@pytest.mark.parametrize("text, needle", [
    ('{"a1": 1,\n "b1": }', "line 2"),
    ("[1, 2]", "expected a JSON object"),
    (json.dumps({k: 0.0 for k in COEFF_NAMES[:-1]}), "missing field(s): beta2"),
    (json.dumps(HARMONIC | {"gamma": 1.0}), "unknown field(s): gamma"),
    (json.dumps(HARMONIC | {"a1": "x"}), "field 'a1'"),
    (json.dumps(HARMONIC | {"a1": True}), "field 'a1'"),
])
def test_parse_errors_name_the_problem(text, needle):
    with pytest.raises(ParseError, match=re.escape(needle)):
        parse_system(text)


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=6))
def test_dumps_floats_round_trip(vals):
    assert json.loads(dumps(vals)) == vals


def test_dumps_nonfinite_as_null():
    assert json.loads(dumps({"a": float("nan"), "b": [float("inf"), 1.0]})) == {"a": None, "b": [None, 1.0]}


def test_lienard_dict_round_trip():
    lf = to_lienard(two_foci(-0.02))
    back = lienard_from_dict(json.loads(dumps(lienard_to_dict(lf))))
    xs = np.array([-3.0, -1.5, -0.5, 0.0, 2.0])
    assert np.array_equal(back.f(xs), lf.f(xs)) and np.array_equal(back.g(xs), lf.g(xs))
    assert back.pole == lf.pole and back.q == lf.q


def test_formula_two_foci_damping():
    lf = to_lienard(two_foci(0.1))
    assert format_weighted(lf.f) == "(0.1 + 1.8 x + x^2) * |1 + x|^-3"


# -- CLI ---------------------------------------------------------------------


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_reduce_harmonic(tmp_path, capsys):
    code, out, _ = run(["reduce", "--input", write(tmp_path, HARMONIC)], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["f"]["formula"] == "0" and d["g"]["formula"] == "(x)"
    lf = lienard_from_dict(d)
    assert lf.g.scalar(0.7) == pytest.approx(0.7) and lf.f.scalar(0.7) == 0.0


def test_reduce_two_foci_formula(tmp_path, capsys):
    data = two_foci().to_dict() | {"epsilon": -0.02}
    code, out, _ = run(["reduce", "--input", write(tmp_path, data)], capsys)
    assert code == 0
    assert json.loads(out)["f"]["formula"] == "(-0.02 + 2.04 x + x^2) * |1 + x|^-3"


@pytest.mark.parametrize("argv, data, code, needle", [
    (["reduce"], None, 2, "--input"),
    (["reduce", "--input", "{path}"], "{not json", 2, "ParseError"),
    (["reduce", "--input", "/nonexistent/x.json"], None, 2, "ParseError"),
    (["reduce", "--input", "{path}"], {k: 0.0 for k in COEFF_NAMES} | {"alpha1": 1.0, "a2": 1.0}, 3,
     "DegenerateFirstEquation"),
    (["cycles", "--input", "{path}", "--box", "1,0"], HARMONIC, 2, "--box"),
    (["transversal", "--input", "{path}"], HARMONIC, 3, "ConditionsViolated"),
    (["plot", "--input", "{path}"], {"artifact": "nothing"}, 2, "UnknownArtifact"),
])
def test_exit_codes(tmp_path, capsys, argv, data, code, needle):
    path = write(tmp_path, data) if data is not None else ""
    got, _, err = run([a.replace("{path}", path) for a in argv], capsys)
    assert got == code
    assert needle in err


def test_bad_tol_is_config_error(tmp_path, capsys):
    code, _, err = run(["cycles", "--input", write(tmp_path, HARMONIC), "--tol", "-1"], capsys)
    assert code == 2 and "--tol" in err


def test_certify_two_foci(tmp_path, capsys):
    code, out, _ = run(["certify", "--input", write(tmp_path, two_foci().to_dict()), "--epsilon", "-0.02"], capsys)
    assert code == 0
    certs = json.loads(out)["certificates"]
    kinds = sorted((c["kind"], c["orientation"]) for c in certs)
    assert kinds == [("abcd", "mirrored"), ("theorem1", "mirrored"), ("theorem1", "mirrored")]


def test_certify_attractor(tmp_path, capsys):
    code, out, _ = run(["certify", "--input", write(tmp_path, ATTRACTOR.to_dict())], capsys)
    d = json.loads(out)
    assert code == 0 and d["conditions21"]["passed"]
    # alpha1 + beta2 = 1 is far from a weak focus, so only the attractor certificate fires
    assert [c["kind"] for c in d["certificates"]] == ["theorem5"]


def test_output_dir_and_byte_identical_reruns(tmp_path, capsys):
    inp = write(tmp_path, ATTRACTOR.to_dict())
    texts = []
    for k in range(2):
        out_dir = tmp_path / f"run{k}"
        assert main(["cycles", "--input", inp, "--box", "3,5", "--output", str(out_dir)]) == 0
        texts.append((out_dir / "cycles.json").read_bytes())
    capsys.readouterr()
    assert texts[0] == texts[1]
    assert len(json.loads(texts[0])["cycles"]) == 1


def test_reduce_reparse_cycles_match_in_process(tmp_path, capsys):
    data = two_foci().to_dict() | {"epsilon": -0.02}
    code, out, _ = run(["reduce", "--input", write(tmp_path, data)], capsys)
    assert code == 0
    reparsed = lienard_from_dict(json.loads(out))
    direct = reduce_system(detuned(two_foci(), -0.02))
    opts = CycleSearchOptions(n_scan=40)
    a = find_cycles(reparsed, (-3.0, 1.0), opts)
    b = find_cycles(direct, (-3.0, 1.0), opts)
    assert len(a) == len(b) == 2
    for ca, cb in zip(a, b):
        assert ca.section_x == pytest.approx(cb.section_x, abs=1e-12)
        assert ca.period == pytest.approx(cb.period, abs=1e-12)


def _svg_series(svg):
    return re.findall(r'<polyline id="([^"]+)"', svg)


def _plot(tmp_path, artifact):
    path = write(tmp_path, artifact, "artifact.json")
    assert main(["plot", "--input", path, "--output", str(tmp_path / "plot")]) == 0
    svg = (tmp_path / "plot" / "portrait.svg").read_text()
    with open(tmp_path / "plot" / "portrait.csv", newline="") as fh:
        header = next(csv.reader(fh))
    return svg, header


def test_plot_transversal_series_match_csv(tmp_path, capsys):
    assert main(["transversal", "--input", write(tmp_path, ATTRACTOR.to_dict()), "--output", str(tmp_path)]) == 0
    capsys.readouterr()
    svg, header = _plot(tmp_path, json.loads((tmp_path / "transversal.json").read_text()))
    names = _svg_series(svg)
    assert sum(n.startswith("omega") for n in names) == 8
    assert sorted(h[:-2] for h in header if h.endswith("_x") and h != "equilibria_x") == sorted(names)
    assert 'id="pole"' in svg and 'stroke-dasharray' in svg


def test_plot_empty_cycle_list(tmp_path, capsys):
    artifact = {"artifact": "cycles", "chart": "lienard", "system": two_foci().to_dict(), "cycles": []}
    svg, header = _plot(tmp_path, artifact)
    capsys.readouterr()
    assert not [n for n in _svg_series(svg) if n.startswith("cycle")]
    assert svg.count('class="equilibrium"') == 2
    assert "equilibria_x" in header


def test_plot_two_foci_cycles(tmp_path, capsys):
    inp = write(tmp_path, two_foci().to_dict() | {"epsilon": -0.02})
    assert main(["cycles", "--input", inp, "--box=-3,1", "--output", str(tmp_path)]) == 0
    capsys.readouterr()
    svg, header = _plot(tmp_path, json.loads((tmp_path / "cycles.json").read_text()))
    assert [n for n in _svg_series(svg) if n.startswith("cycle")] == ["cycle0", "cycle1"]
    assert {"cycle0_x", "cycle1_y"} <= set(header)


def test_sample_cli(tmp_path, capsys):
    code, out, _ = run(["sample", "--n", "3", "--seed", "5"], capsys)
    d = json.loads(out)
    assert code == 0 and d["n_total"] == 3 and d["seed"] == 5


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "quadlienard", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("quadlienard ")


def test_demo_inputs_parse():
    root = Path(__file__).resolve().parents[1] / "demos" / "data"
    for p in sorted(root.glob("*.json")):
        s, _ = parse_system(p.read_text(), str(p))
        assert isinstance(s, QuadraticSystem)
