import json
import os
import re
from fractions import Fraction as F

import pytest

from gurarii import io
from gurarii.certify import trace_to_json, universal_trace_to_json, verify_trace
from gurarii.cli import main
from gurarii.engine import ChainSpace, ChainSubspace, back_and_forth, embed_universal, schedule_make
from gurarii.errors import InputError
from gurarii.instances import random_chain, random_space
from gurarii.operators import LinearMap
from gurarii.spaces import l1, linf, zero_space


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


# -- io ---------------------------------------------------------------------

@pytest.mark.parametrize("rep", ["facets", "vertices"])
def test_space_round_trip(tmp_path, hexagon, rep):
    p = tmp_path / "h.json"
    io.write_space(str(p), hexagon, rep)
    back = io.read_space(str(p))
    assert back.ball_facets == hexagon.ball_facets
    assert back.name == "hexagon"


def test_chain_round_trip(tmp_path):
    C = random_chain(7, [1, 2, 3], "C")
    io.write_chain(str(tmp_path / "C"), C)
    D = io.read_chain(str(tmp_path / "C"))
    assert [s.ball_facets for s in D.stages] == [s.ball_facets for s in C.stages]
    assert [i.matrix for i in D.inclusions] == [i.matrix for i in C.inclusions]


def test_floats_and_bad_json_are_rejected(tmp_path):
    p = tmp_path / "f.json"
    p.write_text('{"name": "x", "dimension": 1, "representation": "vertices", "data": [[0.5], [-0.5]]}')
    with pytest.raises(InputError):
        io.read_space(str(p))
    p.write_text('{"name": "x",\n  "dimension": }')
    with pytest.raises(InputError) as info:
        io.load_json(str(p))
    assert info.value.line == 2


def test_rational_parsing():
    assert io.parse_rational("-3/4", "v") == F(-3, 4)
    assert io.parse_rational(2, "v") == 2
    with pytest.raises(InputError):
        io.parse_rational("abc", "v")
    with pytest.raises(InputError):
        io.parse_rational(True, "v")


def test_map_name_mismatch(tmp_path, line, square):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"domain": "other", "codomain": square.name, "matrix": [["1"], ["0"]]}))
    with pytest.raises(InputError):
        io.read_map(str(p), line, square)


# -- cli --------------------------------------------------------------------

def test_space_validate_exit_codes(tmp_path, capsys, hexagon):
    good = tmp_path / "hex.json"
    io.write_space(str(good), hexagon, "vertices")
    code, out, _ = run(capsys, "space-validate", good)
    assert code == 0 and "facets = 6" in out
    tri = tmp_path / "tri.json"
    tri.write_text(json.dumps({"name": "t", "dimension": 2, "representation": "vertices",
                               "data": [["1", "0"], ["0", "1"], ["-1", "-1"]]}))
    code, out, _ = run(capsys, "space-validate", tri)
    assert code == 1 and "not symmetric" in out
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    code, _, err = run(capsys, "space-validate", bad)
    assert code == 2 and "line 1" in err


def _scalar_files(tmp_path, line, c):
    X, Y, m = tmp_path / "X.json", tmp_path / "Y.json", tmp_path / "f.json"
    io.write_space(str(X), line, name="X")
    io.write_space(str(Y), line, name="Y")
    m.write_text(json.dumps({"domain": "X", "codomain": "Y", "matrix": [[c]]}))
    return X, Y, m


def test_amalgamate_cli(tmp_path, capsys, line):
    X, Y, m = _scalar_files(tmp_path, line, "3/2")
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "amalgamate", X, Y, m, "--eps", "3/5", "--out", out_dir, "--json")
    rep = json.loads(out)
    assert code == 0 and rep["passed"]
    assert "9/16" in json.dumps(rep)
    assert {"Z.json", "i.json", "j.json", "report.json"} <= set(os.listdir(out_dir))
    code, out, _ = run(capsys, "amalgamate", X, Y, m, "--eps", "1/2")
    assert code == 1 and "1/2" in out
    with pytest.raises(SystemExit) as info:
        run(capsys, "amalgamate", X, Y, m, "--eps", "0.5")
    assert info.value.code == 2


def test_render_l1(tmp_path, capsys):
    p, svg = tmp_path / "l1.json", tmp_path / "l1.svg"
    io.write_space(str(p), l1(2), name="l1")
    code, _, _ = run(capsys, "render", p, svg, "--scale", "50")
    assert code == 0
    text = svg.read_text()
    points = re.search(r'points="([^"]+)"', text).group(1).split()
    assert len(points) == 4


def test_render_rejects_other_dimensions(tmp_path, capsys):
    p = tmp_path / "l3.json"
    io.write_space(str(p), l1(3), name="l3")
    code, _, _ = run(capsys, "render", p, tmp_path / "x.svg")
    assert code != 0


def test_random_space_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "random-space", "--seed", 5, "--output", a)[0] == 0
    assert run(capsys, "random-space", "--seed", 5, "--output", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert io.read_space(str(a)).ball_facets == random_space(5, 2).ball_facets


def test_back_and_forth_cli_and_verify(tmp_path, capsys, line, hexagon):
    E = ChainSpace([line, linf(2)], [LinearMap(line, linf(2), ((1,), (0,)))], "E")
    Fc = ChainSpace([line, hexagon], [LinearMap(line, hexagon, ((1,), (0,)))], "F")
    io.write_chain(str(tmp_path / "E"), E)
    io.write_chain(str(tmp_path / "F"), Fc)
    m = tmp_path / "f.json"
    m.write_text(json.dumps({"matrix": [["21/20"]]}))
    out_dir = tmp_path / "run"
    code, out, _ = run(capsys, "back-and-forth", tmp_path / "E", tmp_path / "F", m,
                       "--target-eps", "3/5", "--eps0", "11/20", "--ratio", "1/50", "--depth", 2,
                       "--out", out_dir)
    assert code == 0, out
    trace = out_dir / "trace.json"
    assert run(capsys, "verify", trace)[0] == 0
    data = json.loads(trace.read_text())
    data["steps"][0]["drift"]["value"] = "1/7"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    code, out, _ = run(capsys, "verify", bad)
    assert code == 1 and "step[0].drift.value" in out


# -- certify ------------------------------------------------------------------

def test_trace_json_verifies_and_detects_tampering(line):
    E = ChainSpace([line, linf(2)], [LinearMap(line, linf(2), ((1,), (0,)))], "E")
    X = ChainSubspace.build(E, 0, [(1,)])
    tr = back_and_forth(E, E, X, LinearMap(X.space, line, ((1,),)), schedule_make(F(1, 2), depth=2))
    data = trace_to_json(tr)
    results = verify_trace(data)
    assert results and all(ok for _, ok, _ in results)
    data["digest"] = "0" * 64
    assert not all(ok for _, ok, _ in verify_trace(data))


def test_universal_trace_round_trip(line):
    X = ChainSpace([zero_space(), line], [LinearMap(zero_space(), line, ((),))])
    tr = embed_universal(X, ChainSpace.from_space(l1(1), "G"), 2)
    data = json.loads(io.dumps(universal_trace_to_json(tr)))
    assert all(ok for _, ok, _ in verify_trace(data))
