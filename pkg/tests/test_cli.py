import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from homsafe import cli, homctl, linctl, scenario, sim


def run(*argv):
    return cli.main(list(argv))


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as ei:
        run("bogus")
    assert ei.value.code == 1
    with pytest.raises(SystemExit) as ei:
        run("simulate", "--mode", "Nope")
    assert ei.value.code == 1
    assert run("design", "--x0=1,2") == 1  # not in the interior of the half-space
    assert run("design", "--n", "0") == 1
    assert run("design") == 1
    assert run("verify", "--only", "99") == 1
    assert run("verify", "--only", "5", "--tol", "nope=1") == 1
    assert run("simulate") == 1


def test_design_reference_output(capsys):
    assert run("design", "--x0=-4,2", "--alpha", "0.50125", "--T", "4", "--json") == 0
    info = json.loads(capsys.readouterr().out)
    assert info["K"] == [-4.0, -4.0]
    assert info["lambda"] == 2.0 and "lower bound 1.5" in info["lambda_source"]
    assert info["rho"] == pytest.approx(0.5537452636744548, rel=1e-12)
    assert info["s_tilde"] == 0.0 and info["T"] == 4.0
    assert info["Ptilde_diagonal"]


def test_design_text_and_outdir(tmp_path, capsys):
    assert run("design", "--n", "5", "--lam", "1", "--out", str(tmp_path)) == 0
    text = capsys.readouterr().out
    assert "P~ (full)" in text and "margins" in text
    assert json.loads((tmp_path / "design.json").read_text())["n"] == 5


def test_csv_header():
    assert cli.csv_header(2) == "t,x1,x2,u,u_nom,homnorm,r_t,phi1,phi2,in_omega,in_omega_r,in_theta,override,at_origin"
    assert len(cli.csv_header(3).split(",")) == 2 * 3 + 10


def test_simulate_scenario_file(tmp_path, capsys):
    s = sim.paper_v_scenario("FxTSf", t_end=3.0)
    src = tmp_path / "s.toml"
    src.write_text(scenario.dumps(s))
    out = tmp_path / "run"
    assert run("simulate", str(src), "--out", str(out)) == 0
    assert "restraint checks   1/1 ok" in capsys.readouterr().out
    # the written scenario is byte-identical to the input
    assert (out / "scenario.toml").read_text() == src.read_text()
    with open(out / "trajectory.csv") as fh:
        rows = list(csv.reader(fh))
    assert ",".join(rows[0]) == cli.csv_header(2)
    assert len(rows) == 3002 and all(len(r) == len(rows[0]) for r in rows)
    # 17 significant digits: floats round-trip exactly
    tr = sim.integrate(s)
    np.testing.assert_array_equal([float(v) for v in rows[500][1:3]], tr.x[499])
    # flags are recomputable from the state columns
    d = tr.design
    for r in rows[1::250]:
        x, rt = np.array([float(r[1]), float(r[2])]), float(r[6])
        assert int(r[9]) == int(linctl.in_cone_omega(tr.linear, x))
        assert int(r[10]) == int(homctl.in_cone_omega_r(d, x, rt, tol=s.inv_slack))
    summary = json.loads((out / "summary.json").read_text())
    assert summary["omega_r_violations"] == 0
    assert len(summary["override_intervals"]) == 1


def test_simulate_parse_error_and_divergence(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("n = 2\nx0 = [oops\n")
    assert run("simulate", str(bad), "--out", str(tmp_path / "b")) == 2
    div = tmp_path / "div.toml"
    div.write_text('n = 2\nx0 = [-1.0, 0.0]\ncontroller = "nominal"\nt_end = 1.0\n[nominal]\nconstant = 1e13\n')
    assert run("simulate", str(div), "--out", str(tmp_path / "d")) == 4


def test_region(tmp_path, capsys):
    assert run("region", "--preset", "paperV", "--grid=-8:1:25,-4:8:25", "--out", str(tmp_path)) == 0
    out = capsys.readouterr().out
    assert "containment violations      0" in out
    with open(tmp_path / "region.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 625
    om_b = sum(r["in_omega"] == "1" and r["in_ball"] == "1" for r in rows)
    omr_b = sum(r["in_omega_r"] == "1" and r["in_ball"] == "1" for r in rows)
    assert omr_b > om_b > 0
    assert all(float(r["x1"]) <= 0 for r in rows if r["in_omega"] == "1" or r["in_omega_r"] == "1")


def test_region_empty_grid(tmp_path):
    assert run("region", "--n", "2", "--lam", "2", "--grid=-1:0:0,-1:1:5", "--out", str(tmp_path)) == 0
    assert (tmp_path / "region.csv").read_text() == ""
    assert run("region", "--n", "2", "--lam", "2", "--grid=-1:0", "--out", str(tmp_path)) == 1


def test_verify_pass_and_negative_control(capsys):
    assert run("verify", "--only", "5") == 0
    assert "PASS [ 5]" in capsys.readouterr().out
    assert run("verify", "--only", "5", "--inject-fault", "lmi") == 0
    assert run("verify", "--only", "6", "--inject-fault", "lmi") == 3
    out = capsys.readouterr().out
    assert "FAIL [ 6] LMI feasibility" in out and "failed: [6]" in out


def test_verify_tolerance_report(capsys, tmp_path):
    assert run("verify", "--only", "5", "--tol", "identity=1e-300", "--out", str(tmp_path)) == 0
    out = capsys.readouterr().out
    assert "margins:" in out
    rep = json.loads((tmp_path / "verify.json").read_text())
    assert rep[0]["id"] == 5 and "closed_loop" in rep[0]["margins"]


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "homsafe", "design", "--n", "2", "--lam", "2"],
                       capture_output=True, text=True)
    assert p.returncode == 0 and "rho" in p.stdout
