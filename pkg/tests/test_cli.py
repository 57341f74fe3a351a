import json
import subprocess
import sys

import pytest

from skewfree.cli import report_text, run

SCHEMA = {
    "scenario": str,
    "generators": list,
    "symmetricChecked": bool,
    "symmetricHolds": (bool, type(None)),
    "hypothesisChecks": list,
    "maxWordLength": int,
    "truncationOrder": int,
    "wordCount": int,
    "rank": int,
    "status": str,
    "matrixDims": list,
    "elapsedMs": int,
}


def run_json(capsys, *argv):
    code = run(list(argv) + ["--format", "json", "--jobs", "1"])
    out = capsys.readouterr().out
    return code, json.loads(out)


def check_schema(doc):
    for key, typ in SCHEMA.items():
        assert isinstance(doc[key], typ), key
    assert doc["status"] in ("certified", "inconclusive")
    for c in doc["hypothesisChecks"]:
        assert set(c) == {"name", "mode", "bound", "pass"}
        assert c["mode"] in ("exact", "bounded")
        assert c["bound"] is None or isinstance(c["bound"], int)
    assert len(doc["matrixDims"]) == 2


def test_weyl_ml_json(capsys):
    code, doc = run_json(capsys, "weyl-ml", "--max-len", "3", "--order", "16")
    assert code == 0
    check_schema(doc)
    assert doc["status"] == "certified" and doc["wordCount"] == doc["rank"] == 15


def test_text_and_json_agree(capsys):
    code_j, doc = run_json(capsys, "weyl-symmetric", "--max-len", "2", "--order", "10")
    code_t = run(["weyl-symmetric", "--max-len", "2", "--order", "10", "--format", "text", "--jobs", "1"])
    text = capsys.readouterr().out
    assert code_j == code_t == 0
    assert f"words: {doc['wordCount']}  rank: {doc['rank']}" in text
    assert f"matrix: {doc['matrixDims'][0]} x {doc['matrixDims'][1]}" in text
    assert f"status: {doc['status']}" in text
    assert report_text(doc).startswith("scenario: weyl-symmetric")


def test_reruns_are_identical(capsys):
    _, a = run_json(capsys, "prop51", "--case", "ii", "--m", "2", "--max-len", "2", "--order", "8")
    _, b = run_json(capsys, "prop51", "--case", "ii", "--m", "2", "--max-len", "2", "--order", "8")
    a.pop("elapsedMs")
    b.pop("elapsedMs")
    assert a == b


def test_heisenberg_type_two_exit(capsys):
    code = run(["heisenberg", "--type", "II"])
    err = capsys.readouterr().err
    assert code == 1
    assert "This is contained in Theorem 1.1 of [FGS13]" in err


def test_heisenberg_type_four(capsys):
    code, doc = run_json(capsys, "heisenberg", "--type", "IV", "--max-len", "2", "--order", "8")
    assert code == 0 and doc["symmetricChecked"] and doc["symmetricHolds"]


def test_bad_lambda_is_an_error(capsys):
    assert run(["prop51", "--case", "ii", "--lambda", "1"]) == 1
    assert "lambda" in capsys.readouterr().err


def test_parse_command(capsys):
    assert run(["parse", "X*(1-X)^-1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["canonical"] == "X*(1 - X)^-1"
    assert run(["parse", "(1"]) == 1
    assert "offset 2" in capsys.readouterr().err


def test_identities_command(capsys):
    code, doc = run_json(capsys, "identities", "--template", "i", "--max-len", "2")
    assert code == 0
    check_schema(doc)
    assert doc["params"] == ["0", "1", "1", "0"] and doc["mismatches"] == []
    assert doc["wordCount"] == doc["rank"] > 0


def test_check_command(capsys):
    code, doc = run_json(capsys, "check", "--scenario", "heisenberg-IV", "--order", "8")
    assert code == 0
    check_schema(doc)
    assert doc["wordCount"] == 0 and all(c["pass"] for c in doc["hypothesisChecks"])
    code, doc = run_json(capsys, "check", "--scenario", "prop51-ii", "--b", "0")
    assert code == 2 and not all(c["pass"] for c in doc["hypothesisChecks"])


def _write(tmp_path, cfg):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def test_custom_config(tmp_path, capsys):
    cfg = {
        "name": "heis-custom",
        "level": "QtY",
        "sigma": {"t": "t", "Y": "t*Y"},
        "sigmaInverse": {"t": "t", "Y": "Y/t"},
        "params": [1, -1, 0, 1],
        "generators": ["(1-Y)^-1*X*(1-X)^-1", "X*(1-X)^-1*(1-Y)^-1"],
        "hypotheses": [{"label": "alpha", "alphas": ["(1-Y)^-1"], "form": "pair", "kernel": "Qt"}],
        "maxLen": 2,
        "order": 8,
    }
    code, doc = run_json(capsys, "custom", "--config", _write(tmp_path, cfg))
    assert code == 0
    check_schema(doc)
    assert doc["scenario"] == "heis-custom" and doc["wordCount"] == 7
    assert [c["mode"] for c in doc["hypothesisChecks"]] == ["exact", "bounded"]


def test_custom_config_with_involution(tmp_path, capsys):
    cfg = {
        "level": "Qt",
        "delta": {"t": "1"},
        "generators": ["t*(1+t^2)^-1*X^-1*t*(1+t^2)^-1"],
        "involution": {"X": "-X", "t": "t"},
        "maxLen": 2,
        "order": 8,
    }
    code, doc = run_json(capsys, "custom", "--config", _write(tmp_path, cfg))
    # the letter a X^-1 a is skew, so the run certifies but the symmetry check fails
    assert code == 2 and doc["status"] == "certified"
    assert doc["symmetricChecked"] and doc["symmetricHolds"] is False


def test_custom_inconclusive(tmp_path, capsys):
    cfg = {"level": "Qt", "delta": {"t": "1"}, "generators": ["X", "X"], "maxLen": 1, "order": 4}
    code, doc = run_json(capsys, "custom", "--config", _write(tmp_path, cfg))
    assert code == 2 and doc["rank"] == 2 and doc["dependentWords"] == ["g1", "g2"]


@pytest.mark.parametrize(
    "cfg",
    [
        {"level": "Qt", "generators": []},
        {"level": "Qz", "generators": ["X"]},
        {"level": "Qt", "generators": ["X*Y"]},
        {"level": "Qt", "generators": ["X*("]},
        {"level": "QtY", "sigma": {"Y": "t*Y"}, "generators": ["X"]},
        {"level": "Qt", "generators": ["X"], "involution": {"X": "X^2"}},
    ],
)
def test_custom_config_rejected(tmp_path, capsys, cfg):
    code = run(["custom", "--config", _write(tmp_path, cfg), "--jobs", "1"])
    captured = capsys.readouterr()
    assert code == 1
    assert captured.out == ""
    assert captured.err.startswith("error:")


def test_missing_config(capsys):
    assert run(["custom", "--config", "/nonexistent/cfg.json"]) == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "skewfree", "parse", "t*(1+t^2)^-1", "--format", "text"],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0
    assert res.stdout.splitlines()[0] == "((t)/(t^2 + 1))"
