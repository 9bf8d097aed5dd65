import json
import shutil
import subprocess
from pathlib import Path

import pytest

from conecalc import cycles as cy
from conecalc import serialize as io
from conecalc.cli import main
from conecalc.complex import ComplexMorphism, Subdivision, line_complex, product, projection_morphism
from conecalc.moduli import build_m0n, psi_divisor

import instances as inst

DATA = Path(__file__).resolve().parent.parent / "data"


def d(name):
    return str(DATA / name)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# -- documented examples ------------------------------------------------------------


def test_descendant(capsys):
    assert run(capsys, "descendant", "5", "1", "1", "0", "0", "0")[:2] == (0, "2\n")


def test_descendant_wrong_length(capsys):
    code, _, err = run(capsys, "descendant", "5", "1", "1")
    assert code == 2 and "DimensionMismatch" in err


def test_balance_exit_codes(capsys):
    assert run(capsys, "balance", d("p2-rays-11.json"))[:2] == (0, "balanced\n")
    code, out, _ = run(capsys, "balance", d("p2-rays-12.json"))
    assert code == 1 and "-1" in out


def test_witness(capsys):
    code, out, _ = run(capsys, "witness", d("p2.json"), d("psi-1-neg1.json"), d("ones.json"))
    assert (code, out) == (0, "identity holds: true\n")
    assert run(capsys, "witness", d("psi-1-neg1.json"), d("ones.json"))[0] == 0


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", d("p2.json"))
    assert code == 0 and out.startswith("valid")


def test_validate_reports_violations(tmp_path, capsys):
    doc = io.read_json(d("line.json"))
    doc["cones"] = [c for c in doc["cones"] if c["rays"]]
    bad = tmp_path / "bad.json"
    bad.write_text(io.dumps(doc))
    code, out, _ = run(capsys, "validate", str(bad))
    assert code == 1 and "NotFaceClosed" in out


def test_dot_and_degree(tmp_path, capsys):
    target = tmp_path / "dot.json"
    assert run(capsys, "dot", d("psi-1-0.json"), d("ones.json"), "--out", str(target))[0] == 0
    E = io.load_any(str(target), io.Loader())
    assert {g: c.weight[()] for g, c in E.nonzero().items()} == {("e1",): 1}
    assert run(capsys, "degree", str(target))[:2] == (0, "1\n")


def test_push(capsys):
    code, out, _ = run(capsys, "push", d("double-cover.json"), d("line-ones.json"))
    assert code == 0
    assert json.loads(out)["weights"] == {"+": "2", "-": "2"}


def test_not_cp(capsys):
    code, _, err = run(capsys, "cp", d("psi-1-0.json"))
    assert code == 2 and "NotCp" in err and "('e1', 'e2')" in err


def test_cp_and_linequiv(capsys):
    code, out, _ = run(capsys, "cp", d("psi-1-neg1.json"))
    assert code == 0 and json.loads(out)["functionals"] == {"e1|e2": ["1"]}
    code, out, _ = run(capsys, "linequiv", d("psi-1-neg1.json"), d("psi-1-neg1.json"))
    assert code == 0 and json.loads(out)["m"] == ["0"]
    assert run(capsys, "linequiv", d("psi-1-0.json"), d("psi-1-neg1.json"))[0] == 1


def test_cup_tsv(capsys):
    code, out, _ = run(capsys, "cup", d("psi-1-neg1.json"), d("ones.json"), "--format", "tsv")
    assert code == 0 and out == "cone\tweight\n"


def test_gw(capsys):
    code, out, _ = run(capsys, "gw", d("p2-fan.json"), d("lines-degree.json"), d("lines-two-points.json"))
    assert (code, out) == (0, "1\n")


def test_structural_commands(capsys):
    code, out, _ = run(capsys, "m0n", "5")
    assert code == 0 and len(json.loads(out)["rays"]) == 10
    code, out, _ = run(capsys, "psi", "4", "1")
    assert set(json.loads(out)["values"].values()) == {"1/3"}
    code, out, _ = run(capsys, "psi", "4", "1", "--boundary", "2", "3")
    assert json.loads(out)["values"]["I={2,3}"] == "1"
    assert run(capsys, "psi", "4", "1", "--boundary", "1", "3")[0] == 2
    code, out, _ = run(capsys, "star", d("p2.json"), "e1")
    assert code == 0 and json.loads(out)["ambient_rank"] == 0
    code, out, _ = run(capsys, "subdivide", d("p2.json"), "e1|e2", "1,1")
    assert code == 0 and len(json.loads(out)["rays"]) == 3
    code, out, _ = run(capsys, "product", d("p2.json"), d("line.json"))
    assert code == 0 and len(json.loads(out)["rays"]) == 4
    code, out, _ = run(capsys, "mink-basis", d("p2.json"), "-k", "1")
    assert code == 0 and len(json.loads(out)["basis"]) == 1


def test_complex_override(tmp_path, capsys):
    # a weight file whose complex reference is broken still loads with --complex
    doc = io.read_json(d("ones.json"))
    doc["complex"] = "missing.json"
    w = tmp_path / "w.json"
    w.write_text(io.dumps(doc))
    assert run(capsys, "balance", str(w))[0] == 2
    assert run(capsys, "balance", str(w), "--complex", d("p2.json"))[0] == 0


def test_missing_file(capsys):
    code, _, err = run(capsys, "balance", "does-not-exist.json")
    assert code == 2 and err.startswith("error:")


# -- serialization round trips -----------------------------------------------------


def _objects():
    S = inst.p2_complex()
    sub, w = Subdivision.trivial(S).stellar(("e1", "e2"), [1, 1])
    L = line_complex()
    P = product(S, line_complex("t+", "t-"))
    M = build_m0n(5)
    yield "complex", S
    yield "complex", inst.half_cone()
    yield "complex", M
    yield "divisor", psi_divisor(5, 2)
    yield "cycle", cy.TropicalCycle.of(cy.fundamental_weight(M))
    yield "cycle", cy.TropicalCycle(sub, cy.MinkowskiWeight(sub.fine, 1, {(w,): 1}))
    yield "extended", cy.dot(cy.Divisor(S, {"e1": 1}), cy.MinkowskiWeight(S, 1, {("e1",): 1, ("e2",): 1}))
    yield "extended", cy.dot(psi_divisor(5, 1), cy.fundamental_weight(M))
    yield "morphism", ComplexMorphism.from_ray_images(L, L, [[2]], {"+": {"+": 2}, "-": {"-": 2}})
    yield "morphism", projection_morphism(P, S)


@pytest.mark.parametrize("kind, obj", list(_objects()))
def test_round_trip_is_byte_identical(kind, obj):
    text = io.dumps(io.to_json(obj))
    again = io.dumps(io.to_json(io.from_json(json.loads(text), kind)))
    assert again == text


def test_numbers_are_canonical_strings():
    doc = io.to_json(psi_divisor(4, 1))
    assert set(doc["values"].values()) == {"1/3"}
    assert io.parse_cone_id("") == () and io.cone_id(()) == ""
    with pytest.raises(io.FormatError):
        io.parse_num("1/0")


def test_console_script():
    exe = shutil.which("conecalc")
    if exe is None:
        pytest.skip("console script not installed")
    res = subprocess.run([exe, "descendant", "6", "2", "1", "0", "0", "0", "0"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "3\n"
