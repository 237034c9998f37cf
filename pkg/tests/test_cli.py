import csv
import hashlib
import io
import json
import math
from pathlib import Path

import pytest

from remdyn import analytic, cli, validation

GOLDEN = Path(__file__).parent / "golden" / "headers.txt"

SMALL_ARGS = {
    "analytic phase": ["--t", "1"],
    "analytic rate": ["--t", "1", "--u", "0"],
    "analytic pressure": ["--beta", "1"],
    "analytic boundaries": ["--lambda", "3"],
    "scgf": ["--n", "4"],
    "sweep": ["--n", "4", "--t", "0.5,2"],
    "mc": ["--n", "4", "--samples", "200"],
    "resolvent-check": ["--n", "4"],
    "projector": ["--n", "4"],
    "shift": ["--n", "4", "--gamma", "0.2"],
    "phivec": ["--n", "6", "--delta", "0.8", "--seeds", "0-3"],
}


def run(args):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(list(args), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def golden():
    out = {}
    for line in GOLDEN.read_text().splitlines():
        cmd, header = line.split(": ")
        out[cmd] = header
    return out


@pytest.mark.parametrize("cmd", sorted(SMALL_ARGS))
def test_headers_match_golden(cmd):
    code, out, err = run(cmd.split() + SMALL_ARGS[cmd])
    assert code == 0, err
    assert out.splitlines()[0] == golden()[cmd]


def test_phase_example():
    code, out, _ = run(["analytic", "phase", "--t", "1", "--lambda", "1"])
    r = rows(out)
    assert code == 0 and len(r) == 1 and r[0]["phase"] == "Active"


def test_boundaries_example():
    _, out, _ = run(["analytic", "boundaries", "--lambda", "1.698643600"])
    r = rows(out)[0]
    assert r["count"] == "1" and r["kind_1"] == "Triple"
    assert float(r["inv_t_1"]) == pytest.approx(1.442695, abs=1e-6)


def test_rate_zero_and_infinite():
    _, out, _ = run(["analytic", "rate", "--t", "1", "--u", "0,1.3"])
    r = rows(out)
    assert float(r[0]["phi"]) == 0.0 and r[1]["phi"] == "inf"


def test_grid_syntax():
    _, out, _ = run(["analytic", "pressure", "--beta", "0:2:5", "--lambda", "1,2"])
    assert len(rows(out)) == 10


def test_seventeen_digits():
    _, out, _ = run(["analytic", "pressure", "--beta", "2"])
    assert rows(out)[0]["p_rem"] == "%.17g" % analytic.p_rem(2.0)


def test_scgf_lambda0_and_dense(tmp_path):
    code, out, _ = run(["scgf", "--n", "8", "--lambda", "0", "--s", "0.4"])
    r = rows(out)[0]
    assert abs(float(r["theta_n"]) - (math.exp(-0.4) - 1)) < 1e-10
    _, k, _ = run(["scgf", "--n", "8", "--t", "1", "--lambda", "1"])
    _, d, _ = run(["scgf", "--n", "8", "--t", "1", "--lambda", "1", "--method", "dense"])
    assert abs(float(rows(k)[0]["theta_n"]) - float(rows(d)[0]["theta_n"])) < 1e-9


def test_byte_identical_reruns_and_manifest(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["scgf", "--n", "6,8", "--lambda", "0.5,1", "--seeds", "0-2"]
    assert run(args + ["--out", str(a)])[0] == 0
    assert run(args + ["--out", str(b), "--workers", "3"])[0] == 0
    assert a.read_bytes() == b.read_bytes()
    man = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    assert man["outputs"]["a.csv"] == hashlib.sha256(a.read_bytes()).hexdigest()
    assert man["grid_points"] == 12 and man["failed_points"] == 0
    assert all(s == "ok" for s in man["status"])
    assert man["command_line"][1] == "scgf" and "timing_seconds" in man


def test_mc_rerun_identical(tmp_path):
    args = ["mc", "--n", "6", "--samples", "2000", "--seed", "4"]
    assert run(args)[1] == run(args)[1]


def test_config_file_and_override(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# sweep settings\nt = 2\nlambda = 0.5\n")
    _, out, _ = run(["analytic", "phase", "--config", str(conf)])
    r = rows(out)[0]
    assert float(r["t"]) == 2 and float(r["lambda"]) == 0.5
    _, out, _ = run(["analytic", "phase", "--config", str(conf), "--t", "3"])
    assert float(rows(out)[0]["t"]) == 3


def test_bad_config_is_usage_error(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("t = banana\n")
    code, _, err = run(["analytic", "phase", "--config", str(conf)])
    assert code == 2 and "t" in err
    code, _, err = run(["analytic", "phase", "--config", str(tmp_path / "missing")])
    assert code == 2 and "--config" in err


@pytest.mark.parametrize("args,flag", [
    (["analytic", "phase", "--t", "x"], "--t"),
    (["scgf", "--method", "magic"], "--method"),
    (["scgf", "--n", "40"], "--n"),
    (["projector", "--n", "13"], "--n"),
    (["mc", "--samples", "0"], "--samples"),
    (["analytic", "phase", "--s", "0.5"], "--s"),
])
def test_usage_errors_name_flag(args, flag):
    code, _, err = run(args)
    assert code == 2
    assert flag in err


def test_failed_point_exit_1(tmp_path):
    out = tmp_path / "r.csv"
    code, _, err = run(["resolvent-check", "--n", "6", "--E", "0.5", "--out", str(out)])
    assert code == 1 and "point failed" in err
    man = json.loads((tmp_path / "r.csv.manifest.json").read_text())
    assert man["failed_points"] == 1


def test_shift_regime_failure_recorded():
    code, out, _ = run(["shift", "--n", "6", "--gamma", "0.9", "--delta", "0.5"])
    assert code == 1
    assert rows(out)[0]["shift_sup"] == "nan"


def test_validate_subset(tmp_path):
    path = tmp_path / "v.json"
    code, _, err = run(["validate", "quick", "--only", "c1,c2", "--out", str(path)])
    verdict = json.loads(path.read_text())
    assert code == 0 and verdict["passed"]
    assert [c["key"] for c in verdict["criteria"]] == ["c1", "c2"]
    assert all("seconds" in c for c in verdict["criteria"])
    assert "[PASS] c1" in err


def test_validate_unknown_criterion():
    assert run(["validate", "--only", "c99"])[0] == 2


def test_validate_detects_tampered_pressure(monkeypatch):
    real = analytic.p_rem
    monkeypatch.setattr(analytic, "p_rem", lambda b: real(b) * (1 + 1e-9))
    code, out, _ = run(["validate", "quick", "--only", "c1"])
    assert code == 1
    assert json.loads(out)["passed"] is False


def test_validate_levels():
    assert validation.LEVELS == ("quick", "full")
    assert set(validation.CRITERIA) == {f"c{i}" for i in range(1, 11)}
