import numpy as np
import pytest

from thermovi.cli import main
from thermovi.mesh import generate_segment_mesh, write_mesh
from thermovi.output import read_csv, read_vtk

CRUSH = """\
[mesh]
kind = box
lengths = 1, 1, 1
divisions = 1, 1, 1

[material]
model = nonlinear
rho0 = 1.5
mu = 83.33
lambda = 55.55
gamma = 0.5
theta0 = 10
c = 5
eta0 = 10
kappa = 1

[initial]
velocity = (-50*X, 0, 0)

[time]
dt = 0.05
end = 1
"""


def test_run_convergence_scenario(tmp_path, capsys):
    assert main(["run", "convergence_1d", "--out-dir", str(tmp_path), "--snapshot-every", "1"]) == 0
    cols = read_csv(tmp_path / "diagnostics.csv")
    np.testing.assert_array_equal(cols["t"], [0.0, 0.5, 1.0])
    assert np.all(np.isfinite(cols["err_theta"]))
    assert np.all(np.isnan(cols["Ax"]))
    for k in range(3):
        assert (tmp_path / f"snapshot_{k:06d}.vtk").exists()
    snap = read_vtk(tmp_path / "snapshot_000000.vtk")
    assert snap["points"].shape == (11, 3)
    assert not (tmp_path / "FAILED").exists()
    assert "wrote" in capsys.readouterr().out


def test_integrator_override(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "convergence_1d", "--out-dir", str(a)]) == 0
    assert main(["run", "convergence_1d", "--out-dir", str(b), "--integrator", "euler-b"]) == 0
    assert (a / "diagnostics.csv").read_bytes() != (b / "diagnostics.csv").read_bytes()


def test_runs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["run", "convergence_1d", "--out-dir", str(d), "--snapshot-every", "2"]) == 0
    assert (a / "diagnostics.csv").read_bytes() == (b / "diagnostics.csv").read_bytes()
    assert (a / "snapshot_000002.vtk").read_bytes() == (b / "snapshot_000002.vtk").read_bytes()


def test_step_failure_exit_and_marker(tmp_path, capsys):
    cfg = tmp_path / "crush.ini"
    cfg.write_text(CRUSH)
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out-dir", str(out)]) == 3
    marker = (out / "FAILED").read_text().splitlines()
    assert marker[0].startswith("step ") and int(marker[0].split()[1]) >= 1
    assert marker[1].startswith("kind ")
    # the rows before the failure survive
    assert len(read_csv(out / "diagnostics.csv")["t"]) >= 1
    assert "failed" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["run"],
        ["run", "no_such_config"],
        ["run", "convergence_1d", "--integrator", "rk4"],
        ["stability", "convergence_1d", "--factors", "0.9,-1"],
        ["converge", "convergence_1d", "--levels", "0"],
        ["stability", "beam_3d"],
        ["mesh-info", "/nonexistent/file.mesh"],
    ],
)
def test_usage_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_parse_error_reports_line(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(CRUSH.replace("kappa = 1", "kappa = 1\nvolume = 2"))
    assert main(["run", str(cfg), "--out-dir", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "line 16" in err and "volume" in err


def test_converge_table(tmp_path, capsys):
    assert main(["converge", "convergence_1d", "--levels", "2", "--out-dir", str(tmp_path)]) == 0
    lines = (tmp_path / "convergence.csv").read_text().splitlines()
    assert lines[0].startswith("h,dt,err_phi")
    assert len(lines) == 3
    h1, dt1 = lines[2].split(",")[:2]
    assert (float(h1), float(dt1)) == (5.0, 0.25)


def test_stability_table(tmp_path):
    assert main(["stability", "convergence_1d", "--factors", "0.9,1.5", "--steps", "200", "--out-dir", str(tmp_path)]) == 0
    rows = (tmp_path / "stability.csv").read_text().splitlines()
    assert rows[0] == "factor,dt,steps,max_energy_ratio,blew_up"
    assert rows[1].split(",")[-1] == "0" and rows[2].split(",")[-1] == "1"


def test_mesh_info(tmp_path, capsys):
    p = tmp_path / "s.mesh"
    write_mesh(generate_segment_mesh(2.0, 4), p)
    assert main(["mesh-info", str(p)]) == 0
    out = capsys.readouterr().out
    assert "nodes 5" in out and "elements 4" in out and "volume 2" in out


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
