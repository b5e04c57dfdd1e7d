"""Command-line interface: documents in, documents out, exit codes."""

import json

import pytest

from fwlop.cli import main

OP_FWL2 = {
    "chart": {"base_dim": 1, "fiber_rank": 1},
    "space": "E",
    "terms": [
        {"coeff": "1", "dx": [], "du": [1]},
        {"coeff": "u1", "dx": [], "du": [1, 1]},
    ],
}

OP_CORE2 = {
    "chart": {"base_dim": 1, "fiber_rank": 1},
    "space": "E",
    "terms": [{"coeff": "1", "dx": [], "du": [1, 1]}],
}


@pytest.fixture
def op_file(tmp_path):
    def write(doc, name="op.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)

    return write


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_classify_fwl(op_file, capsys):
    code, out, _ = run(capsys, "classify", "--order", "2", op_file(OP_FWL2))
    assert code == 0
    assert out.strip() == "FWL(q=2), weight=-1"


def test_classify_core(op_file, capsys):
    code, out, _ = run(capsys, "classify", "--order", "2", op_file(OP_CORE2))
    assert code == 0
    assert out.strip() == "core(q=2), weight=-2"


def test_classify_neither(op_file, capsys):
    doc = {
        "chart": {"base_dim": 1, "fiber_rank": 1},
        "space": "E",
        "terms": [{"coeff": "u1^2", "dx": [], "du": [1]}],
    }
    code, out, _ = run(capsys, "classify", "--order", "2", op_file(doc))
    assert code == 0
    assert out.startswith("not FWL at q=2")


def test_eval(op_file, capsys):
    code, out, _ = run(capsys, "eval", op_file(OP_CORE2), "--fn", "u1^3")
    assert code == 0
    assert out.strip() == "6*u1"


def test_a_iso_document(op_file, capsys):
    code, out, _ = run(capsys, "a-iso", "--order", "2", op_file(OP_FWL2))
    assert code == 0
    doc = json.loads(out)
    assert doc["field"]["dv"] == ["-v1^2"]
    assert doc["mult"] == "-v1"


def test_a_iso_inverse_round_trip(op_file, capsys, tmp_path):
    code, out, _ = run(capsys, "a-iso", "--order", "2", op_file(OP_FWL2))
    deriv = tmp_path / "deriv.json"
    deriv.write_text(out)
    code, out, _ = run(capsys, "a-inv", "--order", "2", str(deriv))
    assert code == 0
    assert json.loads(out) == OP_FWL2


def test_compose_and_bracket(op_file, capsys):
    left = op_file(OP_CORE2, "l.json")
    right = op_file(OP_FWL2, "r.json")
    code, out, _ = run(capsys, "compose", left, right)
    assert code == 0
    json.loads(out)
    code, out, _ = run(capsys, "bracket", left, right)
    assert code == 0
    json.loads(out)


def test_grade_and_symbol(op_file, capsys):
    code, out, _ = run(capsys, "grade", op_file(OP_FWL2))
    assert code == 0
    assert set(json.loads(out)) == {"-1"}
    code, out, _ = run(capsys, "symbol", op_file(OP_FWL2))
    assert json.loads(out)["terms"] == [{"coeff": "u1", "dx": [], "du": [1, 1]}]


def test_ad(op_file, capsys):
    code, out, _ = run(capsys, "ad", "--order", "2", op_file(OP_FWL2))
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"chart", "field"}
    assert doc["field"]["dv"] == ["-v1^2"]


def test_poisson_command(op_file, capsys):
    code, out, _ = run(
        capsys, "poisson", op_file(OP_CORE2, "a.json"), op_file(OP_CORE2, "b.json")
    )
    assert code == 0
    assert json.loads(out)["terms"] == []


def test_linearize_command(op_file, capsys):
    doc = {
        "chart": {"base_dim": 1, "fiber_rank": 1},
        "space": "Ambient",
        "terms": [
            {"coeff": "u1", "dx": [], "du": [1, 1]},
            {"coeff": "u1^2", "dx": [1], "du": []},
        ],
    }
    code, out, _ = run(capsys, "linearize", "--order", "2", op_file(doc))
    assert code == 0
    assert json.loads(out)["terms"] == [{"coeff": "u1", "dx": [], "du": [1, 1]}]


def test_laplacian_command(op_file, capsys, tmp_path):
    gamma = tmp_path / "gamma.json"
    gamma.write_text(
        json.dumps({"chart": {"base_dim": 1, "fiber_rank": 1}, "gamma": []})
    )
    code, out, _ = run(capsys, "laplacian", str(gamma))
    assert code == 0
    assert json.loads(out)["terms"] == [{"coeff": "2", "dx": [1], "du": [1]}]


def test_verify_ok_and_deterministic(capsys):
    code, out1, _ = run(capsys, "verify", "--suite", "laplacian", "--trials", "3", "--seed", "9")
    assert code == 0
    code, out2, _ = run(capsys, "verify", "--suite", "laplacian", "--trials", "3", "--seed", "9")
    assert out1 == out2
    assert "failures: 0" in out1


def test_verify_unknown_suite(capsys):
    with pytest.raises(SystemExit):
        main(["verify", "--suite", "bogus"])


def test_domain_error_exit_code(op_file, capsys):
    # a-iso of a non-FWL operator is a domain error
    doc = {
        "chart": {"base_dim": 1, "fiber_rank": 1},
        "space": "E",
        "terms": [{"coeff": "u1^2", "dx": [], "du": [1]}],
    }
    code, _, err = run(capsys, "a-iso", "--order", "1", op_file(doc))
    assert code == 1
    assert "NotFWL" in err


def test_parse_error_exit_code(op_file, capsys):
    code, _, err = run(capsys, "eval", op_file(OP_CORE2), "--fn", "u1^0")
    assert code == 3
    assert "PolySyntaxError" in err


def test_document_error_exit_code(op_file, capsys):
    doc = dict(OP_CORE2)
    doc["junk"] = 1
    code, _, err = run(capsys, "classify", "--order", "2", op_file(doc))
    assert code == 3
    assert "DocumentError" in err


def test_nonhomogeneous_multivector_rejected(op_file, capsys):
    code, _, err = run(
        capsys, "poisson", op_file(OP_FWL2, "a.json"), op_file(OP_CORE2, "b.json")
    )
    assert code == 1
    assert "ArityMismatch" in err


def test_output_documents_reload(op_file, capsys):
    # every printed operator document round-trips through the loader
    code, out, _ = run(capsys, "compose", op_file(OP_FWL2, "a.json"), op_file(OP_FWL2, "b.json"))
    from fwlop.diffop import diffop_from_doc

    reloaded = diffop_from_doc(json.loads(out))
    assert json.loads(out) == json.loads(out)
    assert reloaded.order() == 4
