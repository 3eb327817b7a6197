import csv
import hashlib
import json
import re

import numpy as np
import pytest

from pointnls.cli import EXIT_OK, EXIT_PARAMS, EXIT_SELFCHECK, main, read_config
from pointnls.specfun import bessel_k0

GRID_CHECKS = ("(G_lam, G_mu)", "||G_lam||^2", "resolvent", "x.grad", "Gaussian")


def selfcheck_lines(capsys, *argv, k0=None):
    code = main(["selfcheck", *argv], k0=k0)
    lines = [ln for ln in capsys.readouterr().out.splitlines() if ln.strip()]
    return code, lines


def errors_by_name(lines):
    out = {}
    for ln in lines:
        m = re.match(r"(PASS|FAIL)\s+(.*?)\s+error=(\S+)", ln)
        out[m.group(2)] = float(m.group(3))
    return out


def digest(path):
    return hashlib.md5(path.read_bytes()).hexdigest()


def test_selfcheck_default(capsys):
    code, lines = selfcheck_lines(capsys)
    assert code == EXIT_OK
    assert len(lines) == 7
    assert all(ln.startswith("PASS") for ln in lines)


def test_selfcheck_detects_k0_perturbation(capsys):
    code, lines = selfcheck_lines(capsys, k0=lambda x: bessel_k0(x) * (1 + 1e-6))
    assert code == EXIT_SELFCHECK
    assert lines[0].startswith("FAIL") and "K0" in lines[0]
    assert all(ln.startswith("PASS") for ln in lines[1:])


def test_selfcheck_refinement(capsys):
    _, coarse = selfcheck_lines(capsys)
    _, fine = selfcheck_lines(capsys, "--grid-n", "8192")
    ec, ef = errors_by_name(coarse), errors_by_name(fine)
    for name in ec:
        if name.startswith(GRID_CHECKS):
            assert ef[name] < ec[name], name


def test_classic_outputs_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["classic", "--p", "3", "--out-dir", str(d), "--emit-svg"]) == EXIT_OK
    capsys.readouterr()
    for name in ("classic_p3.csv", "classic_p3.json", "classic_p3.svg"):
        assert digest(a / name) == digest(b / name)
    info = json.loads((a / "classic_p3.json").read_text())
    assert 2.2059 <= info["u0"] <= 2.2065
    assert abs(info["mass"] - 2 / 4 * info["lp_norm"]) <= 1e-6 * info["mass"]
    assert info["pohozaev_residual"] <= 1e-6
    rows = list(csv.reader((a / "classic_p3.csv").open()))
    assert rows[0] == ["r", "u"] and len(rows) == 4097


def test_solve_outputs(tmp_path, capsys):
    code = main(["solve", "--alpha", "0", "--p", "3", "--omega", "1e4", "--out-dir", str(tmp_path),
                 "--linearized", "--eig-n", "512"])
    assert code == EXIT_OK
    capsys.readouterr()
    info = json.loads((tmp_path / "ground_a0_p3_w10000.json").read_text())
    assert info["converged"] is True
    assert info["pohozaev_residual"] <= 1e-3
    data = np.loadtxt(tmp_path / "ground_a0_p3_w10000.csv", delimiter=",", skiprows=1)
    with open(tmp_path / "ground_a0_p3_w10000.csv") as fh:
        assert fh.readline().strip() == "r,f,phi"
    assert np.all(np.diff(data[:, 1]) < 0)
    assert np.all(data[:, 2] > 0)
    rep = json.loads((tmp_path / "linearized_a0_p3_w10000.json").read_text())
    assert rep["dims"] == 513 and rep["coercivity_eig"] > 0


@pytest.mark.parametrize("argv", [
    ["solve", "--p", "3", "--omega", "1.0"],
    ["solve", "--p", "3", "--omega", "1.5"],
    ["solve", "--p", "3"],
    ["solve", "--p", "9", "--omega", "100"],
    ["sweep", "--p", "3", "--omega-min", "10", "--omega-max", "100", "--points", "2"],
    ["sweep", "--p", "3", "--omega-min", "100", "--omega-max", "10", "--points", "5"],
    ["classic", "--p", "3", "--grid-n", "1"],
    ["classic"],
])
def test_parameter_errors_exit_3(argv, tmp_path, capsys):
    assert main([*argv, "--out-dir", str(tmp_path)]) == EXIT_PARAMS
    assert capsys.readouterr().err.startswith("error:")


def test_inadmissible_message_cites_range(tmp_path, capsys):
    assert main(["solve", "--p", "3", "--omega", "1.0", "--out-dir", str(tmp_path)]) == EXIT_PARAMS
    err = capsys.readouterr().err
    assert "admissible" in err and "1.62" in err


def test_argparse_errors_exit_3(capsys):
    for argv in (["frobnicate"], ["solve", "--p", "abc"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == EXIT_PARAMS


def test_sweep_outputs(tmp_path, capsys):
    code = main(["sweep", "--p", "2", "--omega-min", "1e2", "--omega-max", "1e6", "--points", "9",
                 "--out-dir", str(tmp_path), "--emit-svg"])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "sign_change,none" in out
    rows = list(csv.DictReader((tmp_path / "mass_curve_a0_p2.csv").open()))
    assert len(rows) == 9
    w = np.array([float(r["omega"]) for r in rows])
    assert np.allclose(np.diff(np.log(w)), np.log(1e4) / 8, rtol=1e-12)
    assert all(r["classification"] == "stable" for r in rows)
    assert len(list(tmp_path.glob("ground_a0_p2_w*.json"))) == 9
    svg = (tmp_path / "mass_curve_a0_p2.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg


def test_sweep_supercritical_sign_change(tmp_path, capsys):
    code = main(["sweep", "--alpha", "0", "--p", "4", "--omega-min", "2", "--omega-max", "1e6",
                 "--points", "40", "--out-dir", str(tmp_path)])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    changes = [ln for ln in out.splitlines() if ln.startswith("sign_change,")]
    assert len(changes) == 1 and changes[0] != "sign_change,none"
    rows = list(csv.DictReader((tmp_path / "mass_curve_a0_p4.csv").open()))
    assert rows[0]["classification"] == "stable"
    assert rows[-1]["classification"] == "unstable"


def test_sweep_svg_deterministic(tmp_path, capsys):
    for d in ("a", "b"):
        main(["sweep", "--p", "3", "--omega-min", "1e2", "--omega-max", "1e4", "--points", "5",
              "--out-dir", str(tmp_path / d), "--emit-svg"])
    capsys.readouterr()
    assert digest(tmp_path / "a" / "mass_curve_a0_p3.svg") == digest(tmp_path / "b" / "mass_curve_a0_p3.svg")


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep settings\np = 3\nomega-min = 100\nomega_max = 1e4\npoints = 4\n"
                   f"out_dir = {tmp_path / 'from_cfg'}\n")
    assert read_config(cfg)["omega_min"] == 100.0
    code = main(["sweep", "--config", str(cfg), "--points", "5"])
    assert code == EXIT_OK
    capsys.readouterr()
    rows = list(csv.DictReader((tmp_path / "from_cfg" / "mass_curve_a0_p3.csv").open()))
    assert len(rows) == 5


@pytest.mark.parametrize("text", ["p 3\n", "bogus = 1\n", "points = many\n"])
def test_bad_config_exit_3(tmp_path, text, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    assert main(["sweep", "--config", str(cfg)]) == EXIT_PARAMS
    assert main(["sweep", "--config", str(tmp_path / "missing.cfg")]) == EXIT_PARAMS
