import json
import math
import subprocess
import sys

import pytest

from shadowlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out)


def test_laplace_density(capsys):
    code, rep = report(capsys, "classify-density", "--family", "laplace", "--p", "2", "--depth", "64")
    assert code == 0
    assert rep["schema"] == "shadowlab/1"
    v = rep["verdict"]
    assert v["kind"] == "GeneralizedHyperbolic"
    assert v["rates"] == [pytest.approx(0.36788, abs=5e-6), pytest.approx(2.71828, abs=5e-6)]
    assert set(v["evidence"]) == {"RNC", "RND", "RNGH_minus", "RNGH_plus"}
    assert len(v["evidence"]["RNGH_plus"]["samples"]) == 64
    assert {"K_hat", "H", "ratio_bound"} <= set(rep["constants"])
    assert rep["provenance"]["options"]["depth"] == 64
    assert rep["provenance"]["options"]["family"] == "laplace"


def test_shift_pair(capsys):
    code, rep = report(capsys, "classify-shift", "--weights", "neg=0.5,pos=2.0", "--depth", "64")
    assert code == 0 and rep["verdict"]["kind"] == "GeneralizedHyperbolic"


def test_shadow_exact(capsys):
    code, rep = report(capsys, "shadow", "--weights", "neg=0.5,pos=2.0", "--delta", "0", "--window", "50")
    assert code == 0
    assert rep["shadow"]["epsilon"] == 0
    assert rep["constants"]["K_used"] == pytest.approx(3.0)


def test_shadow_noisy(capsys, tmp_path):
    archive = tmp_path / "traj.csv"
    code, rep = report(capsys, "shadow", "--weights", "neg=0.5,pos=2.0", "--delta", "0.01",
                       "--noise-seed", "3", "--archive", str(archive))
    assert code == 0 and rep["shadow"]["epsilon"] <= 0.03
    assert (tmp_path / "traj.csv.json").exists()
    code, again = report(capsys, "shadow", "--weights", "neg=0.5,pos=2.0", "--pseudo", str(archive))
    assert again["shadow"]["epsilon"] == pytest.approx(rep["shadow"]["epsilon"], rel=1e-9)


def test_inconclusive_exit(capsys):
    code, rep = report(capsys, "classify-density", "--family", "gaussian")
    assert code == 2
    assert rep["verdict"]["kind"] == "Inconclusive"
    assert rep["verdict"]["reason"] == "HypothesisViolated"


def test_error_exit(capsys):
    code, out, err = run(capsys, "classify-shift", "--weights", "pos=2")
    assert code == 1
    assert "InvalidConfig" in err and "hint:" in err
    assert json.loads(out)["error"]["name"] == "InvalidConfig"


def test_bad_arguments(capsys):
    code, out, err = run(capsys, "classify-density", "--family", "weibull")
    assert code == 1 and "InvalidConfig" in err


def test_determinism(capsys):
    argv = ["shadow", "--weights", "neg=0.5,pos=2.0", "--delta", "0.01", "--noise-seed", "11"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    _, a, _ = run(capsys, "classify-density", "--family", "cauchy")
    _, b, _ = run(capsys, "classify-density", "--family", "cauchy")
    assert a == b


@pytest.mark.parametrize("family, extra", [("exponential", []), ("exponential", ["--sign", "-1"]),
                                           ("laplace", []), ("constant", [])])
def test_emit_measures_round_trip(capsys, tmp_path, family, extra):
    path = tmp_path / "nu.csv"
    _, dens = report(capsys, "classify-density", "--family", family, *extra, "--emit-measures", str(path))
    assert path.read_text().startswith("k,nu\n")
    code, meas = report(capsys, "classify-measures", "--measures", str(path))
    kind = dens["verdict"]["kind"]
    if kind == "NonShadowing":
        # tabulated data can never prove failure
        assert meas["verdict"]["kind"] == "Inconclusive"
    else:
        assert meas["verdict"]["kind"] == kind
        # tabulated rates are last-quartile averages, biased by O(1/depth) near the centre
        depth = meas["provenance"]["options"]["depth"]
        for got, exact in zip(meas["verdict"]["rates"], dens["verdict"]["rates"]):
            assert got == pytest.approx(exact, abs=1.0 / depth)


def test_generator_flags(capsys):
    code, rep = report(capsys, "classify-measures", "--generator", '{"kind":"exp-abs","c":2.718281828459045}')
    assert rep["verdict"]["kind"] == "GeneralizedHyperbolic"
    code, rep = report(capsys, "classify-measures", "--geometric", "1.0")
    assert code == 0 and rep["verdict"]["kind"] == "NonShadowing"
    code, rep = report(capsys, "classify-shift", "--exp-abs", "2.718281828459045", "--p", "4")
    assert rep["verdict"]["kind"] == "GeneralizedHyperbolic"


def test_factor_check(capsys):
    code, rep = report(capsys, "factor-check", "--family", "laplace", "--samples", "20")
    assert code == 0 and rep["factor"]["passed"]
    assert rep["constants"]["H"] <= math.e ** 2


def test_membership(capsys):
    code, rep = report(capsys, "membership", "--family", "laplace", "--indicator", "0",
                       "--class", "UGH_minus", "--K", str(math.e ** 2), "--t", str(1 / math.e))
    assert code == 0 and rep["membership"]["member"] is True
    fn = json.dumps({"pieces": [{"k": -1, "cell": "B1", "a": 1.0}]})
    code, rep = report(capsys, "membership", "--family", "laplace", "--function", fn,
                       "--class", "UGH_plus", "--K", "7.5", "--t", str(1 / math.e))
    assert rep["membership"]["member"] is True


def test_text_and_csv(capsys):
    code, out, _ = run(capsys, "classify-shift", "--weights", "const=0.5", "--format", "text")
    assert "verdict: Contraction" in out
    code, out, _ = run(capsys, "classify-shift", "--weights", "const=0.5", "--format", "csv", "--depth", "4")
    lines = out.splitlines()
    assert lines[0] == "condition,n,r_n" and len(lines) == 1 + 4 * 4


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps({"command": "classify-density", "family": "exponential", "depth": 16}))
    code, rep = report(capsys, "--config", str(cfg))
    assert code == 0 and rep["verdict"]["kind"] == "Contraction"
    assert rep["provenance"]["options"]["depth"] == 16


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps({"command": "classify-density", "colour": "blue"}))
    code, _, err = run(capsys, "--config", str(cfg))
    assert code == 1 and "InvalidConfig" in err


def test_sweep(capsys, tmp_path):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps([
        {"command": "classify-density", "family": "laplace"},
        {"command": "classify-density", "family": "gaussian"},
        {"command": "classify-shift", "weights": "neg=0.5,pos=2.0"},
    ]))
    code, out, _ = run(capsys, "--config", str(cfg), "--jobs", "2")
    reports = json.loads(out)
    assert [r["verdict"]["kind"] for r in reports] == ["GeneralizedHyperbolic", "Inconclusive",
                                                       "GeneralizedHyperbolic"]
    assert code == 2


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "shadowlab.cli", "classify-shift", "--weights",
                           "const=2.0", "--depth", "8"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["verdict"]["kind"] == "Dilation"
