import csv
import io
import json
import math
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renewcouple.cli import main, mixed_seed

FAST_TV = ["--paths", "4000", "--runs", "1500"]


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_bound_exponential_reports_theta_and_R_star():
    code, out, err = run("bound", "--dist", "exp(rate=1)", "--alpha", "1", "--b1", "0")
    assert code == 0
    rows = dict(line.split(None, 1) for line in out.splitlines() if not line.startswith("R_star"))
    assert float(rows["Theta"]) == 2.0
    assert "R_star (optimized)" in out


def test_bound_fixed_R_and_curve_file(tmp_path):
    path = tmp_path / "curve.csv"
    code, out, _ = run("bound", "--dist", "uniform(lo=0,hi=1)", "--R", "0.9", "--out", str(path),
                       "--t-points", "4", "--t-scale", "linear")
    assert code == 0 and "R_star" not in out
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "bound"] and len(rows) == 5
    assert [float(r[0]) for r in rows[1:]] == pytest.approx([5, 170, 335, 500])


def test_bound_json():
    code, out, _ = run("bound", "--dist", "exp(rate=1)", "--R", "4", "--format", "json", "--t-points", "3")
    data = json.loads(out)
    assert code == 0 and data["R"] == 4.0 and data["kappa_R"] == 1.0 and len(data["curve"]["bound"]) == 3


def test_bound_alpha_too_large_exits_2():
    code, out, err = run("bound", "--dist", "pareto(xm=1,alpha=3)", "--alpha", "2")
    assert code == 2 and out == ""
    assert err.count("\n") == 1 and err.startswith("renewcouple: error:")


@pytest.mark.parametrize("argv", [
    ["bound", "--dist", "exp(rate=-1)"],
    ["bound", "--dist", "nonsense"],
    ["couple", "--dist", "uniform(lo=0,hi=1)", "--b1", "2"],
    ["couple", "--dist", "exp(rate=1)", "--R", "1"],
    ["bound", "--t-start", "10", "--t-stop", "1"],
    ["lemma-check", "--dist", "uniform(lo=0,hi=1)", "--dist2", "uniform(lo=2,hi=3)"],
])
def test_bad_input_exits_2(argv):
    code, _, err = run(*argv)
    assert code == 2 and err.count("\n") == 1


@settings(max_examples=40, deadline=None)
@given(st.text(alphabet="expgamuniform(=,.0123456789);w- ", max_size=25))
def test_malformed_specs_never_crash(text):
    code, _, err = run("lemma-check", "--dist", text, "--paths", "200")
    assert code in (0, 1, 2)
    if code == 2:
        assert err.count("\n") == 1


def test_couple_deterministic_and_complete(tmp_path):
    a, b, trace = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "trace.csv"
    args = ["couple", "--dist", "exp(rate=1)", "--b1", "3", "--b2", "0.5", "--runs", "400", "--seed", "12"]
    c1, _, err = run(*args, "--out", str(a), "--trace", str(trace))
    c2, _, _ = run(*args, "--out", str(b), "--threads", "3")
    assert c1 == c2 == 0
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.DictReader(a.open()))
    assert list(rows[0]) == ["run", "tau", "attempts", "coupled"] and len(rows) == 400
    assert all(r["coupled"] == "1" for r in rows)
    assert "non_coupled=0" in err
    mean_tau = float(err.split("mean_tau=")[1].split()[0])
    assert 0 < mean_tau < math.inf
    trace_rows = list(csv.DictReader(trace.open()))
    assert sum(int(r["attempts"]) for r in rows) == len(trace_rows)
    assert {"leader", "D", "zeta", "window", "coupled", "beta"} <= set(trace_rows[0])


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("# experiment\ndist = gamma(shape=2,rate=1)\nalpha=1\nR=6\nformat=json\n")
    code, out, _ = run("bound", "--config", str(cfg))
    assert code == 0 and json.loads(out)["law"] == "gamma(shape=2.0,rate=1.0)" and json.loads(out)["R"] == 6.0
    code, out, _ = run("bound", "--config", str(cfg), "--R", "7")
    assert json.loads(out)["R"] == 7.0
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour=blue\n")
    code, _, err = run("bound", "--config", str(bad))
    assert code == 2 and "colour" in err
    code, _, err = run("bound", "--config", str(tmp_path / "missing.cfg"))
    assert code == 2


def test_seed_mixing_separates_subcommands():
    assert mixed_seed(0, "bound") != mixed_seed(0, "couple")
    assert mixed_seed(5, "couple") == mixed_seed(5, "couple")


def test_lorden_and_lemma_check():
    code, out, _ = run("lorden", "--dist", "uniform(lo=0,hi=1)", "--paths", "20000", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["holds"] and data["theta"] == pytest.approx(2 / 3)
    code, out, _ = run("lemma-check", "--dist", "exp(rate=1)", "--dist2", "exp(rate=2)", "--paths", "100000")
    assert code == 0 and out.count("PASS") == 4
    code, out, _ = run("lemma-check", "--dist", "gamma(shape=2,rate=1)", "--b1", "1.5", "--paths", "20000")
    assert code == 0


def test_tvcurve_csv(tmp_path):
    path = tmp_path / "tv.csv"
    code, _, _ = run("tvcurve", "--b1", "5", "--alpha", "2", *FAST_TV, "--t-points", "4", "--out", str(path))
    rows = list(csv.reader(path.open()))
    assert code == 0 and rows[0] == ["t", "tv_binned", "ci", "tv_coupling", "ci", "bound"] and len(rows) == 5


def test_verify_exponential_default_passes():
    code, out, _ = run("verify", *FAST_TV)
    assert code == 0 and out.count("PASS") == 5 and "FAIL" not in out


def test_verify_uniform_R09_passes():
    code, out, _ = run("verify", "--dist", "uniform(lo=0,hi=1)", "--R", "0.9", *FAST_TV,
                       "--t-start", "1", "--t-stop", "50")
    assert code == 0 and "FAIL" not in out


def test_verify_negative_control_trips_domination():
    # For Exp(1), alpha=2, b1=5 the constant K is about 7.9e5, so 2K/t^2 stays at its
    # ceiling of 2 over [5, 500] and halving K cannot be detected; a tiny scale can.
    base = ["verify", "--b1", "5", "--alpha", "2", *FAST_TV]
    code, out, _ = run(*base, "--bound-scale", "0.5")
    assert code == 0
    code, out, _ = run(*base, "--bound-scale", "1e-6")
    assert code == 1
    assert any(line.startswith("FAIL domination") for line in out.splitlines())


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "renewcouple", "bound", "--dist", "exp(rate=1)", "--R", "4"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "kappa_R" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "renewcouple", "bound", "--dist", "exp("],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 2 and proc.stderr.count("\n") == 1
