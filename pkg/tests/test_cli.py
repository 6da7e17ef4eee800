import argparse
import json

import pytest

from harmonica.cli import main, parse_complex, parse_grid, parse_range, parse_sweep
from harmonica.mesh import read_obj


def test_parsers():
    assert parse_complex("-3+3i") == -3 + 3j
    assert parse_complex("2") == 2
    assert parse_grid("64x32") == (64, 32)
    assert parse_range("-2:1.5") == (-2.0, 1.5)
    assert parse_sweep("0.1:0.9:9") == (0.1, 0.9, 9)
    for bad, fn in (("3+", parse_complex), ("64", parse_grid), ("1:0", parse_range), ("0:1:0", parse_sweep)):
        with pytest.raises(argparse.ArgumentTypeError):
            fn(bad)


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_periods_json(capsys):
    assert main(["periods", "--a", "0.5", "--json"]) == 0
    rep = _json(capsys)
    assert rep["schema_version"] == 1
    row = rep["rows"][0]
    assert row["b"] == pytest.approx(-0.517960787847346, abs=1e-12)
    assert row["matches"] == "reciprocal"


def test_periods_sweep(capsys):
    assert main(["periods", "--sweep", "0.1:0.9:5", "--json"]) == 0
    rep = _json(capsys)
    assert len(rep["rows"]) == 5 and all(-2 < r["b"] < 0 for r in rep["rows"])


def test_verify_catenoid_ends(capsys):
    assert main(["verify", "--family", "catenoid", "--alpha=-3+3i", "--beta=-1-1i", "--r1", "2",
                 "--suite", "ends", "--json"]) == 0
    rep = _json(capsys)
    assert rep["passed"] and [e["end_type"] for e in rep["ends"]] == ["catenoidal", "catenoidal"]
    assert rep["flux"]["vertical"] is False


def test_verify_reports_failure(capsys):
    assert main(["verify", "--family", "rotational", "--b", "-1", "--suite", "identities", "--json"]) == 1
    rep = _json(capsys)
    assert rep["immersion"]["passed"] is False and rep["immersion"]["witness"]["z"]


def test_verify_spec_file(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"family": "flujo", "params": {"b": 4, "c": 0}}))
    assert main(["verify", "--spec", str(spec), "--suite", "identities", "--n-points", "500", "--json"]) == 0
    assert _json(capsys)["identities"]["n_points"] >= 500


def test_generate_obj(tmp_path, capsys):
    out = tmp_path / "cat.obj"
    assert main(["generate", "--family", "catenoid", "--grid", "16x16", "--out", str(out)]) == 0
    v, n, f = read_obj(out)
    assert v.shape == (256, 3) and len(f) == 2 * 15 * 16


@pytest.mark.parametrize("argv,code", [
    (["generate", "--family", "catenoid", "--out", "/nonexistent/dir/x.obj"], 4),
    (["generate", "--family", "catenoid", "--alpha", "1", "--beta", "0", "--out", "x.obj"], 2),
    (["generate", "--family", "catenoid", "--grid", "bad", "--out", "x.obj"], 2),
    (["periods", "--a", "1.5"], 2),
    (["verify", "--family", "flujo", "--b", "1+1i"], 2),
    (["verify"], 2),
])
def test_exit_codes(argv, code, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == code


def test_thread_variable_validated(monkeypatch):
    monkeypatch.setenv("HARMONICA_THREADS", "zero")
    assert main(["periods", "--a", "0.5"]) == 2
