"""Command-line entry points: verify | spectrum | evolve.

Exit codes: 0 success, 1 scientific check failed, 2 invalid input,
3 guarded termination (the run stopped before t_end to protect the
interface parametrization).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import ConfigError, RunConfig, dump_config, load_config
from .evolution import run as evolve_run
from .fields import BulkField, make_grid
from .reporting import write_diagnostics, write_snapshot, write_spectrum_report
from .stokes import spectrum
from . import verify as verify_mod


def _load(args):
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = RunConfig()
    if args.mode:
        cfg.evolution.mode = args.mode
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_verify(args):
    cfg = _load(args)
    checks = verify_mod.run_all(n_theta=cfg.geometry.n_theta, seed=cfg.seed)
    lines = [c.line() for c in checks]
    print("\n".join(lines))
    out = os.path.join(args.out, f"{cfg.prefix}_verify.txt")
    with open(out, "w") as fh:
        fh.write("# dropstokes-verify v1\n")
        fh.write("\n".join(lines) + "\n")
    ok = all(c.passed for c in checks)
    print(f"verification {'passed' if ok else 'FAILED'}; report: {out}")
    return 0 if ok else 1


def cmd_spectrum(args):
    cfg = _load(args)
    rep = spectrum(cfg.geometry, cfg.physics)
    out = os.path.join(args.out, f"{cfg.prefix}_spectrum.txt")
    write_spectrum_report(out, rep)
    print(rep.summary())
    print(f"report: {out}")
    return 0 if (rep.kernel_dim == 3 and rep.gap > 0 and rep.semisimple) else 1


def _initial_velocity(cfg):
    grid = make_grid(cfg.geometry)
    if cfg.velocity == "rest":
        return BulkField.zeros(grid, 2)
    if cfg.velocity == "swirl":
        # azimuthal profile vanishing at the wall with continuous traces;
        # its viscous shear jump vanishes only for matched viscosities
        RO = cfg.geometry.R_Omega
        amp = cfg.velocity_amp

        def fn(r, t):
            ut = amp * r * (RO**2 - r**2) / RO**3
            return np.stack([np.zeros_like(ut), ut])

        return BulkField.from_function(grid, fn)
    raise ConfigError(f"unknown velocity preset '{cfg.velocity}'")


def cmd_evolve(args):
    cfg = _load(args)
    geom, params, evo = cfg.geometry, cfg.physics, cfg.evolution
    h0 = cfg.height0()
    if h0.max_abs() >= evo.amplitude_guard * geom.a:
        print(f"initial height {h0.max_abs():.3g} violates the amplitude guard "
              f"{evo.amplitude_guard * geom.a:.3g}", file=sys.stderr)
        return 2
    u0 = _initial_velocity(cfg)
    from .evolution import validate_initial_data

    report = validate_initial_data(geom, params, u0, h0)
    if not report.passed:
        print(f"initial data rejected:\n{report}", file=sys.stderr)
        return 2
    traj = evolve_run(geom, params, evo, u0, h0, validate=False)
    diag_path = os.path.join(args.out, f"{cfg.prefix}_diagnostics.tsv")
    write_diagnostics(diag_path, traj)
    snap_path = os.path.join(args.out, f"{cfg.prefix}_final.snapshot")
    write_snapshot(snap_path, geom, params, traj.final_state, traj.times[-1])
    print(f"termination: {traj.termination} after t={traj.times[-1]:.6g}")
    print(f"diagnostics: {diag_path}\nsnapshot: {snap_path}")
    if traj.termination == "t_end":
        return 0
    if traj.termination == "amplitude_guard":
        return 3
    return 1


def make_parser():
    ap = argparse.ArgumentParser(prog="dropstokes",
                                 description="two-phase droplet flow on a fixed reference disk")
    ap.add_argument("--config", default=None, help="path to a dropstokes-config file")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="seed for randomized checks")
    ap.add_argument("--mode", choices=("stokes", "navier-stokes"), default=None)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", help="run the operator verification suites")
    sub.add_parser("spectrum", help="compute and report the linearized spectrum")
    sub.add_parser("evolve", help="run the time integration")
    p = sub.add_parser("print-config", help="print the default configuration")
    return ap


def main(argv=None):
    ap = make_parser()
    args = ap.parse_args(argv)
    try:
        os.makedirs(args.out, exist_ok=True)
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "spectrum":
            return cmd_spectrum(args)
        if args.command == "evolve":
            return cmd_evolve(args)
        if args.command == "print-config":
            print(dump_config(_load(args)), end="")
            return 0
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
