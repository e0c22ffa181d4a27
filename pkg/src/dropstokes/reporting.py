"""Writers/readers for snapshots, diagnostic streams and spectrum reports.

All formats are line-oriented text with a versioned first line; floats are
written with 17 significant digits so every file round-trips bit-exactly
through its own reader.
"""

from __future__ import annotations

import numpy as np

from .fields import BulkField, PhaseParams, make_grid
from .geometry import Geometry
from .stokes import SpectrumReport, StateZ
from .surface import HeightField

SNAP_HEADER = "# dropstokes-snapshot v1"
DIAG_HEADER = "# dropstokes-diagnostics v1"
SPEC_HEADER = "# dropstokes-spectrum v1"

DIAG_COLUMNS = ["t", "phi", "dissipation", "volume1", "max_velocity",
                "ball_center_x", "ball_center_y", "ball_radius",
                "ball_residual", "ball_condition_r"]

F = "%.17e"


def _fmt(x):
    return F % float(x)


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------

def write_snapshot(path, geom: Geometry, params: PhaseParams, state: StateZ, t):
    with open(path, "w") as fh:
        fh.write(SNAP_HEADER + "\n")
        fh.write("t " + _fmt(t) + "\n")
        fh.write("geometry " + " ".join(_fmt(v) for v in (geom.R, geom.R_Omega, geom.a))
                 + f" {geom.n_theta} {geom.n_r1} {geom.n_r2}\n")
        fh.write("physics " + " ".join(_fmt(v) for v in
                 (params.rho1, params.rho2, params.mu1, params.mu2, params.sigma)) + "\n")
        fh.write(f"height_coeffs {state.h.coeffs.shape[0]}\n")
        for k, c in enumerate(state.h.coeffs):
            fh.write(f"{k} {_fmt(c.real)} {_fmt(c.imag)}\n")
        for name, fld in (("u", state.u), ("pi", state.pi)):
            for phase, dat in ((1, fld.data1), (2, fld.data2)):
                for comp in range(dat.shape[0]):
                    fh.write(f"field {name} phase {phase} comp {comp} shape {dat.shape[1]} {dat.shape[2]}\n")
                    for row in dat[comp]:
                        fh.write(" ".join(_fmt(v) for v in row) + "\n")


def read_snapshot(path):
    """Returns (t, Geometry, PhaseParams, StateZ)."""
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if lines[0] != SNAP_HEADER:
        raise ValueError("not a snapshot file")
    t = float(lines[1].split()[1])
    gtok = lines[2].split()[1:]
    geom = Geometry(R=float(gtok[0]), R_Omega=float(gtok[1]), a=float(gtok[2]),
                    n_theta=int(gtok[3]), n_r1=int(gtok[4]), n_r2=int(gtok[5]))
    ptok = [float(v) for v in lines[3].split()[1:]]
    params = PhaseParams(*ptok)
    nm = int(lines[4].split()[1])
    coeffs = np.zeros(nm, dtype=complex)
    idx = 5
    for _ in range(nm):
        tok = lines[idx].split()
        coeffs[int(tok[0])] = float(tok[1]) + 1j * float(tok[2])
        idx += 1
    h = HeightField(coeffs, geom.R, geom.n_theta)
    grid = make_grid(geom)
    store = {("u", 1): [], ("u", 2): [], ("pi", 1): [], ("pi", 2): []}
    while idx < len(lines):
        tok = lines[idx].split()
        assert tok[0] == "field"
        name, phase, nr = tok[1], int(tok[3]), int(tok[7])
        idx += 1
        arr = np.array([[float(v) for v in lines[idx + j].split()] for j in range(nr)])
        idx += nr
        store[(name, phase)].append(arr)
    u = BulkField(grid, np.stack(store[("u", 1)]), np.stack(store[("u", 2)]))
    pi = BulkField(grid, np.stack(store[("pi", 1)]), np.stack(store[("pi", 2)]))
    from .transmission import interface_jump

    return t, geom, params, StateZ(u, pi, interface_jump(pi), h)


# ---------------------------------------------------------------------------
# diagnostics stream
# ---------------------------------------------------------------------------

def write_diagnostics(path, trajectory):
    with open(path, "w") as fh:
        fh.write(DIAG_HEADER + "\n")
        fh.write("\t".join(DIAG_COLUMNS) + "\n")
        for d in trajectory.diagnostics:
            fh.write("\t".join(_fmt(d[c]) for c in DIAG_COLUMNS) + "\n")
        fh.write(f"# termination {trajectory.termination}\n")


def read_diagnostics(path):
    """Returns (dict of column arrays, termination reason)."""
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if lines[0] != DIAG_HEADER:
        raise ValueError("not a diagnostics file")
    cols = lines[1].split("\t")
    rows = []
    term = "unknown"
    for ln in lines[2:]:
        if ln.startswith("# termination"):
            term = ln.split()[-1]
            continue
        rows.append([float(v) for v in ln.split("\t")])
    data = np.array(rows)
    return {c: data[:, i] for i, c in enumerate(cols)}, term


# ---------------------------------------------------------------------------
# spectrum report
# ---------------------------------------------------------------------------

def write_spectrum_report(path, rep: SpectrumReport):
    with open(path, "w") as fh:
        fh.write(SPEC_HEADER + "\n")
        fh.write(f"kernel_dim {rep.kernel_dim}\n")
        fh.write("gap " + _fmt(rep.gap) + f" mode {rep.gap_mode}\n")
        fh.write("kernel_tol " + _fmt(rep.kernel_tol) + "\n")
        fh.write(f"semisimple {int(rep.semisimple)}\n")
        fh.write("jordan_ratio " + _fmt(rep.jordan_ratio) + "\n")
        fh.write("invariance_defect " + _fmt(rep.invariance_defect) + "\n")
        fh.write(f"geometry {rep.geometry[0]} {rep.geometry[1]} {rep.geometry[2]}\n")
        for k in rep.modes:
            eigs = rep.eigenvalues[k]
            fh.write(f"mode {k} kernel {rep.kernel_dims.get(k, 0)} " +
                     " ".join(_fmt(e.real) + "," + _fmt(e.imag) for e in eigs) + "\n")


def read_spectrum_report(path):
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if lines[0] != SPEC_HEADER:
        raise ValueError("not a spectrum report")
    kernel_dim = int(lines[1].split()[1])
    gap = float(lines[2].split()[1])
    gap_mode = int(lines[2].split()[3])
    kernel_tol = float(lines[3].split()[1])
    semisimple = bool(int(lines[4].split()[1]))
    jordan = float(lines[5].split()[1])
    invar = float(lines[6].split()[1])
    geometry = tuple(int(v) for v in lines[7].split()[1:])
    modes, eigenvalues, kernel_dims = [], {}, {}
    for ln in lines[8:]:
        tok = ln.split()
        k = int(tok[1])
        modes.append(k)
        kernel_dims[k] = int(tok[3])
        eigenvalues[k] = np.array([complex(float(a), float(b))
                                   for a, b in (pair.split(",") for pair in tok[4:])])
    return SpectrumReport(modes, eigenvalues, kernel_dims, kernel_dim, gap, gap_mode,
                          kernel_tol, semisimple, jordan, invar, geometry)
