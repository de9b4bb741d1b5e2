import csv
import json

import pytest

from multiloc.cli import ConfigError, main, parse_config, run_id, strip_comments

RECURSION = """{
  // valid hypotheses
  "experiment": "recursion", "seed": 1,
  "recursion": {"a": 1, "b": 0, "p": 0, "nu": 1.0, "L0": 1.0, "eta": 1.0, "S0": 0.5}
}"""

MOMENTS = {
    "experiment": "moments", "seed": 1,
    "model": {"region": {"sites": [[0], [1], [2]]}, "n": 2,
              "disorder": {"distribution": "uniform", "lambda": 10}},
    "moments": {"x": [[0], [1]], "y": [[0], [1]], "s": 0.3, "I": [13.5, 14.5], "M": 20},
}


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj, indent=2))
    return p


def test_strip_comments_keeps_strings_and_lines():
    text = '{"a": "x//y", /* c\n */ "b": 1} // end'
    out = strip_comments(text)
    assert json.loads(out) == {"a": "x//y", "b": 1}
    assert out.count("\n") == text.count("\n")


def test_recursion_run(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(write(tmp_path, "c.json", RECURSION)), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "pass"
    assert "summary.json" in (out / "MANIFEST").read_text()


def test_missing_lambda_names_field(tmp_path, capsys):
    bad = json.loads(json.dumps(MOMENTS))
    del bad["model"]["disorder"]["lambda"]
    assert main(["run", str(write(tmp_path, "c.json", bad))]) == 1
    err = capsys.readouterr().err
    assert "lambda" in err and "line" in err


def test_unknown_field_rejected():
    with pytest.raises(ConfigError):
        parse_config(json.dumps(dict(MOMENTS, extra=1)))


def test_run_id_ignores_output_and_threads():
    a = run_id(MOMENTS)
    assert a == run_id(dict(MOMENTS, output="x", threads=8))
    assert a != run_id(dict(MOMENTS, seed=2))


def test_moments_run_is_thread_invariant(tmp_path):
    cfg = write(tmp_path, "c.json", MOMENTS)
    assert main(["run", str(cfg), "--out", str(tmp_path / "a"), "--threads", "1"]) == 0
    assert main(["run", str(cfg), "--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    a = (tmp_path / "a" / "moments.csv").read_bytes()
    assert a == (tmp_path / "b" / "moments.csv").read_bytes()
    rows = list(csv.DictReader(a.decode().splitlines()))
    assert rows[0]["M"] == "20" and float(rows[0]["mean"]) > 0


def test_sweep_emits_slope(tmp_path):
    cfg = write(tmp_path, "c.json", MOMENTS)
    out = tmp_path / "sw"
    code = main(["sweep", str(cfg), "--param", "model.disorder.lambda", "--values", "10", "20", "40", "80",
                 "--out", str(out)])
    assert code == 0
    rows = list(csv.DictReader((out / "slope.csv").read_text().splitlines()))
    assert rows[0]["parameter"] == "model.disorder.lambda" and float(rows[0]["slope"]) < 0


def test_sweep_empty_values(tmp_path):
    cfg = write(tmp_path, "c.json", MOMENTS)
    assert main(["sweep", str(cfg), "--param", "model.disorder.lambda", "--out", str(tmp_path / "x")]) == 1


def test_verify_subset(tmp_path):
    assert main(["verify", "--only", "1", "2", "10", "--out", str(tmp_path / "v")]) == 0
    summary = json.loads((tmp_path / "v" / "summary.json").read_text())
    assert {str(c["number"]) for c in summary["criteria"]} == {"1", "2", "10"}
