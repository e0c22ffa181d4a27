import os

import pytest
from numpy.testing import assert_allclose

from dropstokes.cli import main
from dropstokes.config import ConfigError, dump_config, parse_config
from dropstokes.evolution import EvolutionConfig, initial_state, run
from dropstokes.fields import BulkField, PhaseParams, make_grid
from dropstokes.geometry import Geometry
from dropstokes.reporting import (
    read_diagnostics,
    read_snapshot,
    read_spectrum_report,
    write_diagnostics,
    write_snapshot,
    write_spectrum_report,
)
from dropstokes.stokes import spectrum
from dropstokes.surface import HeightField

SMALL_CFG = """# dropstokes-config v1
[geometry]
n_theta = 16
n_r1 = 24
n_r2 = 24

[evolution]
dt = 0.02
t_end = 0.3
cadence = 5
"""


def test_config_parse_and_roundtrip():
    cfg = parse_config(SMALL_CFG)
    assert cfg.geometry.n_theta == 16
    assert cfg.evolution.dt == 0.02
    assert cfg.physics.sigma == 2.0  # default
    text = dump_config(cfg)
    cfg2 = parse_config(text)
    assert cfg2.geometry == cfg.geometry
    assert cfg2.physics == cfg.physics
    assert cfg2.harmonics == cfg.harmonics


def test_config_errors():
    with pytest.raises(ConfigError):
        parse_config("[geometry]\nn_theta = 16\n")  # missing header
    with pytest.raises(ConfigError):
        parse_config("# dropstokes-config v1\n[physics]\nsigma = -1\n")
    with pytest.raises(ConfigError):
        parse_config("# dropstokes-config v1\n[initial]\nh0 = nonsense\n")


def test_cli_exit_codes(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(SMALL_CFG)
    assert main(["--config", str(cfg), "--out", str(tmp_path), "evolve"]) == 0
    assert (tmp_path / "run_diagnostics.tsv").exists()
    assert (tmp_path / "run_final.snapshot").exists()

    bad = tmp_path / "bad.cfg"
    bad.write_text("[geometry]\nn_theta = 16\n")
    assert main(["--config", str(bad), "--out", str(tmp_path), "evolve"]) == 2

    # oversized initial height is rejected at validation time
    oversize = tmp_path / "big.cfg"
    oversize.write_text(SMALL_CFG + "\n[initial]\nh0 = 2:0.7:0\n")
    assert main(["--config", str(oversize), "--out", str(tmp_path), "evolve"]) == 2

    assert main(["--config", str(cfg), "--out", str(tmp_path), "spectrum"]) == 0
    assert (tmp_path / "run_spectrum.txt").exists()


def test_cli_guard_breach_exit(tmp_path):
    # admissible start in the unstable large-slope regime: the height grows
    # until the interface map degenerates and the run stops under guard
    cfg = tmp_path / "guard.cfg"
    cfg.write_text(
        "# dropstokes-config v1\n"
        "[geometry]\nR = 1.0\nR_Omega = 2.5\na = 0.5\nn_theta = 16\nn_r1 = 32\nn_r2 = 32\n"
        "[physics]\nsigma = 1.0\n"
        "[evolution]\ndt = 0.05\nt_end = 20.0\n"
        "[initial]\nh0 = 2:0.08:0\n"
    )
    assert main(["--config", str(cfg), "--out", str(tmp_path), "evolve"]) == 3


def test_cli_invalid_physics(tmp_path):
    cfg = tmp_path / "bad_phys.cfg"
    cfg.write_text("# dropstokes-config v1\n[physics]\nsigma = -2.0\n")
    assert main(["--config", str(cfg), "--out", str(tmp_path), "spectrum"]) == 2


def test_cli_verify_exit_codes(tmp_path):
    good = tmp_path / "good.cfg"
    good.write_text("# dropstokes-config v1\n[geometry]\nn_theta = 128\n")
    assert main(["--config", str(good), "--out", str(tmp_path), "verify"]) == 0
    assert (tmp_path / "run_verify.txt").exists()

    # under-resolved angular grid: the curvature oracle misses its tolerance
    coarse = tmp_path / "coarse.cfg"
    coarse.write_text("# dropstokes-config v1\n[geometry]\nn_theta = 8\n")
    assert main(["--config", str(coarse), "--out", str(tmp_path), "verify"]) == 1


def test_cli_deterministic_stream(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(SMALL_CFG)
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert main(["--config", str(cfg), "--out", str(out1), "evolve"]) == 0
    assert main(["--config", str(cfg), "--out", str(out2), "evolve"]) == 0
    s1 = (out1 / "run_diagnostics.tsv").read_bytes()
    s2 = (out2 / "run_diagnostics.tsv").read_bytes()
    assert s1 == s2


def test_snapshot_roundtrip(tmp_path):
    geom = Geometry(R=2.0, R_Omega=5.0, a=1.8, n_theta=16, n_r1=24, n_r2=24)
    params = PhaseParams(sigma=2.0)
    grid = make_grid(geom)
    h0 = HeightField.from_harmonics(16, 2.0, [(2, 0.05, 0.01)])
    st = initial_state(geom, params, BulkField.zeros(grid, 2), h0)
    path = tmp_path / "state.snapshot"
    write_snapshot(path, geom, params, st, 1.25)
    t, geom2, params2, st2 = read_snapshot(path)
    assert t == 1.25
    assert geom2 == geom and params2 == params
    assert_allclose(st2.h.coeffs, st.h.coeffs)
    assert_allclose(st2.u.data1, st.u.data1)
    assert_allclose(st2.pi.data2, st.pi.data2)


def test_diagnostics_roundtrip(tmp_path):
    geom = Geometry(R=2.0, R_Omega=5.0, a=1.8, n_theta=16, n_r1=24, n_r2=24)
    params = PhaseParams(sigma=2.0)
    grid = make_grid(geom)
    h0 = HeightField.from_harmonics(16, 2.0, [(2, 0.03, 0.0)])
    traj = run(geom, params, EvolutionConfig(dt=0.02, t_end=0.2, cadence=2), BulkField.zeros(grid, 2), h0)
    path = tmp_path / "diag.tsv"
    write_diagnostics(path, traj)
    cols, term = read_diagnostics(path)
    assert term == "t_end"
    assert_allclose(cols["phi"], traj.column("phi"))
    assert_allclose(cols["ball_radius"], traj.column("ball_radius"))


def test_spectrum_report_roundtrip(tmp_path):
    geom = Geometry(R=2.0, R_Omega=5.0, a=1.8, n_theta=16, n_r1=24, n_r2=24)
    rep = spectrum(geom, PhaseParams(sigma=2.0), mode_range=range(0, 4))
    path = tmp_path / "spec.txt"
    write_spectrum_report(path, rep)
    rep2 = read_spectrum_report(path)
    assert rep2.kernel_dim == rep.kernel_dim
    assert rep2.gap == rep.gap
    assert rep2.semisimple == rep.semisimple
    for k in rep.modes:
        assert_allclose(rep2.eigenvalues[k], rep.eigenvalues[k])
