import csv
import io
import json
import shutil
import subprocess

import pytest

from approx_count.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_gen_then_estimate(tmp_path, capsys):
    data = tmp_path / "pts.csv"
    assert run(capsys, "gen", "--kind", "clustered2d", "--N", 400, "--seed", 3, "--out", data)[0] == 0
    assert data.read_text().splitlines()[0] == "id,x,y"
    code, out, _ = run(capsys, "estimate", "--data", data, "--k", 15, "--d", 0.2,
                       "--method", "lss", "--sample-frac", 0.1, "--strata", 3, "--seed", 1, "--truth")
    res = json.loads(out)
    assert code == 0 and res["method"] == "lss" and res["oracle_calls"] <= 40
    assert res["ci"][0] <= res["count"] <= res["ci"][1] and isinstance(res["truth"], int)


@pytest.mark.parametrize("method", ["srs", "ssp", "ssn", "qlcc", "qlsc", "lws", "lss"])
def test_estimate_every_method_csv(capsys, method):
    code, out, _ = run(capsys, "estimate", "--generate", "clustered2d:300:1", "--k", 15,
                       "--method", method, "--sample-frac", 0.2, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 1 and rows[0]["method"] == method


def test_estimate_is_seeded(capsys):
    argv = ("estimate", "--generate", "uniform2d:300:2", "--query", "skyband", "--k", 30,
            "--method", "lss", "--seed", 4, "--sample-frac", 0.2)
    a, b = (json.loads(run(capsys, *argv)[1]) for _ in range(2))
    a.pop("timings"), b.pop("timings")
    assert a == b


def test_external_scores(tmp_path, capsys):
    scores = tmp_path / "s.csv"
    scores.write_text("id,score\n" + "".join(f"{i},{(i % 10) / 10}\n" for i in range(200)))
    code, out, _ = run(capsys, "estimate", "--generate", "uniform2d:200:1", "--scores", scores,
                       "--method", "lws", "--sample-frac", 0.2)
    assert code == 0 and json.loads(out)["method"] == "lws"


@pytest.mark.parametrize("argv", [
    ("estimate", "--generate", "blobs:100:1"),
    ("estimate", "--generate", "uniform2d:100"),
    ("estimate", "--generate", "uniform2d:100:1", "--method", "srs", "--strata", "3"),
    ("estimate", "--generate", "uniform2d:100:1", "--ci-level", "1.5"),
    ("estimate", "--data", "/nonexistent.csv"),
    ("estimate", "--generate", "uniform2d:100:1", "--noise", "cauchy", "--alpha-mix", "0.5",
     "--query", "skyband"),
    ("frobnicate",),
    ("gen", "--N", "0", "--out", "x.csv"),
])
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_degenerate_adjustment_exits_3(capsys):
    # one positive among 200: the learning sample cannot estimate rates
    code, _, err = run(capsys, "estimate", "--generate", "uniform2d:200:1", "--query", "skyband",
                       "--k", 1, "--method", "qlac", "--sample-frac", 0.1)
    assert code == 3 and "estimator error" in err


def test_sweep_and_report(tmp_path, capsys):
    cfg = {"schema": 1, "dataset": {"generate": {"kind": "clustered2d", "N": 300, "seed": 2}},
           "predicate": {"kind": "neighbors", "k": 15, "d": 0.2},
           "methods": ["srs", {"name": "lss", "H": 3}], "sample_fractions": [0.1], "trials": 4}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    a, b, summary = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "s.json"
    assert run(capsys, "sweep", path, "--out", a, "--summary", summary, "--quiet")[0] == 0
    assert run(capsys, "sweep", path, "--out", b, "--quiet")[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert {r["method"] for r in json.loads(summary.read_text())} == {"srs", "lss"}
    code, out, _ = run(capsys, "report", a, "--group-by", "method", "--format", "csv")
    assert code == 0 and out.splitlines()[0].startswith("method,")
    assert run(capsys, "report", a, "--group-by", "seed")[0] == 2


@pytest.mark.skipif(shutil.which("approx-count") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["approx-count", "estimate", "--generate", "uniform2d:100:1",
                          "--method", "srs"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["method"] == "srs"
