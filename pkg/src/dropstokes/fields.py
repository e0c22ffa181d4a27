"""Two-phase polar grids, derivative matrices and bulk fields.

Each phase carries its own radial node set with the interface radius R as a
shared grid line, so every bulk field stores independent one-sided values
(and hence traces) on both sides of the interface:

* phase 1 (dispersed): offset nodes r_j = (j + 1/2) dr ending exactly at R.
  There is no node at the pole; stencils near r = 0 reach across it using
  the identification f(-r, theta) = f(r, theta + pi), which is exact for
  any single-valued field (polar vector components pick up a sign because
  the basis flips).
* phase 2 (continuous): uniform nodes from R to R_Omega inclusive.

Angular derivatives are spectral; radial derivatives use banded finite
differences (2nd order for solver stencils, 4th order for evaluation).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import Geometry


def fornberg_weights(x0, xs, m):
    """Finite-difference weights for derivatives 0..m at x0 on nodes xs."""
    xs = np.asarray(xs, dtype=float)
    n = xs.shape[0]
    w = np.zeros((m + 1, n))
    c1, c4 = 1.0, xs[0] - x0
    w[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    w[k, i] = c1 * (k * w[k - 1, i - 1] - c5 * w[k, i - 1]) / c2
                w[0, i] = -c1 * c5 * w[0, i - 1] / c2
            for k in range(mn, 0, -1):
                w[k, j] = ((xs[i] - x0) * w[k, j] - k * w[k - 1, j]) / c3
            w[0, j] = (xs[i] - x0) * w[0, j] / c3
        c1 = c2
    return w


def _window_matrix(nodes, rows, deriv, order, lo, hi):
    """Dense differentiation matrix using sliding stencil windows.

    Uses centered stencils of width order+deriv-1 (rounded up to odd) where
    they fit inside [lo, hi] and wider one-sided stencils of width
    order+deriv at the edges, so the requested order holds at every row.
    ``nodes`` may include ghost positions; ``rows`` lists the node indices
    where the derivative is formed.
    """
    n = nodes.shape[0]
    wc = order + deriv - 1
    if wc % 2 == 0:
        wc += 1
    we = order + deriv
    half = wc // 2
    D = np.zeros((len(rows), n))
    for out, i in enumerate(rows):
        if i - half >= lo and i + half <= hi:
            idx = np.arange(i - half, i + half + 1)
        else:
            j0 = min(max(i - we // 2, lo), hi - we + 1)
            idx = np.arange(j0, j0 + we)
        D[out, idx] = fornberg_weights(nodes[i], nodes[idx], deriv)[deriv]
    return D


@dataclass(frozen=True)
class PhaseGrid:
    phase: int
    r: np.ndarray
    dr: float
    weights: np.ndarray  # quadrature weights for integral of f * r dr
    n_ghost: int         # ghost nodes below the first node (phase 1 only)

    @property
    def n(self):
        return self.r.shape[0]


class TwoPhaseGrid:
    """Paired radial grids plus the uniform angular grid and derivative operators."""

    def __init__(self, geom: Geometry):
        self.geom = geom
        self.ntheta = geom.n_theta
        self.theta = geom.theta_grid()

        n1, n2 = geom.n_r1, geom.n_r2
        dr1 = 2.0 * geom.R / (2 * n1 - 1)
        r1 = (np.arange(n1) + 0.5) * dr1
        w1 = r1 * dr1
        w1[-1] = 0.5 * (geom.R**2 - (geom.R - 0.5 * dr1) ** 2)
        self.p1 = PhaseGrid(1, r1, dr1, w1, 2)

        dr2 = (geom.R_Omega - geom.R) / (n2 - 1)
        r2 = geom.R + np.arange(n2) * dr2
        w2 = np.full(n2, dr2)
        w2[0] = w2[-1] = 0.5 * dr2
        self.p2 = PhaseGrid(2, r2, dr2, w2 * r2, 0)

        # extended phase-1 ladder: ghosts at -(3/2)dr, -(1/2)dr keep it uniform
        self._r1_ext = np.concatenate([[-r1[1], -r1[0]], r1])
        self._mats = {}

    # -- derivative matrices -------------------------------------------

    def deriv_matrix(self, phase, deriv, order):
        """Radial differentiation matrix.

        Phase 1 matrices act on the ghost-extended vector (n1 x (n1+2));
        phase 2 matrices are square with one-sided closures at both ends.
        """
        key = (phase, deriv, order)
        if key not in self._mats:
            if phase == 1:
                n1 = self.p1.n
                rows = range(2, n1 + 2)
                D = _window_matrix(self._r1_ext, list(rows), deriv, order, 0, n1 + 1)
            else:
                n2 = self.p2.n
                D = _window_matrix(self.p2.r, list(range(n2)), deriv, order, 0, n2 - 1)
            self._mats[key] = D
        return self._mats[key]

    def fold_mode(self, deriv, order, fold_sign):
        """Phase-1 matrix with ghost columns folded onto their mirror nodes.

        ``fold_sign`` is the per-mode mirror factor: (-1)^k for scalar and
        Cartesian components, -(-1)^k for polar vector components.
        """
        D = self.deriv_matrix(1, deriv, order)
        n1 = self.p1.n
        out = np.array(D[:, 2:])
        out[:, 0] += fold_sign * D[:, 1]
        out[:, 1] += fold_sign * D[:, 0]
        return out

    def extend_phase1(self, arr, polar_component=False):
        """Append pole ghosts along the radial axis via the half-turn identification."""
        roll = self.ntheta // 2
        sign = -1.0 if polar_component else 1.0
        g0 = sign * np.roll(arr[..., 0, :], roll, axis=-1)
        g1 = sign * np.roll(arr[..., 1, :], roll, axis=-1)
        return np.concatenate([g1[..., None, :], g0[..., None, :], arr], axis=-2)

    def dr(self, arr, phase, deriv=1, order=4, polar_component=False):
        """Radial derivative of a (..., nr, ntheta) array."""
        if phase == 1:
            ext = self.extend_phase1(arr, polar_component)
            D = self.deriv_matrix(1, deriv, order)
        else:
            ext = arr
            D = self.deriv_matrix(2, deriv, order)
        return np.einsum("ij,...jt->...it", D, ext)

    def dtheta(self, arr, deriv=1):
        """Spectral angular derivative along the last axis."""
        c = np.fft.rfft(arr, axis=-1)
        k = np.arange(c.shape[-1])
        c = c * (1j * k) ** deriv
        if deriv % 2:
            c[..., -1] = 0.0
        return np.fft.irfft(c, self.ntheta, axis=-1)

    # -- integration ------------------------------------------------------

    def integrate(self, f1, f2, jac1=None, jac2=None):
        """Integral over the disk of a per-phase scalar (measure r dr dtheta)."""
        dth = 2 * np.pi / self.ntheta
        t1 = f1 if jac1 is None else f1 * jac1
        t2 = f2 if jac2 is None else f2 * jac2
        return dth * (np.sum(self.p1.weights @ t1) + np.sum(self.p2.weights @ t2))


@lru_cache(maxsize=None)
def _grid_cache(geom: Geometry):
    return TwoPhaseGrid(geom)


def make_grid(geom: Geometry) -> TwoPhaseGrid:
    """Grid factory; grids are immutable after construction and shared."""
    return _grid_cache(geom)


class BulkField:
    """Scalar or vector field on the two-phase grid with one-sided traces at R.

    ``data1`` has shape (ncomp, n_r1, n_theta), ``data2`` shape
    (ncomp, n_r2, n_theta); vector fields are stored in polar components
    (e_r, e_theta) unless stated otherwise at the call site.
    """

    def __init__(self, grid: TwoPhaseGrid, data1, data2):
        data1 = np.asarray(data1, dtype=float)
        data2 = np.asarray(data2, dtype=float)
        if data1.ndim == 2:
            data1 = data1[None]
        if data2.ndim == 2:
            data2 = data2[None]
        if data1.shape[0] != data2.shape[0]:
            raise ValueError("component count differs between phases")
        if data1.shape[1:] != (grid.p1.n, grid.ntheta) or data2.shape[1:] != (grid.p2.n, grid.ntheta):
            raise ValueError("field shape does not match the grid")
        self.grid = grid
        self.data1 = data1
        self.data2 = data2

    @classmethod
    def zeros(cls, grid, ncomp=1):
        return cls(grid, np.zeros((ncomp, grid.p1.n, grid.ntheta)), np.zeros((ncomp, grid.p2.n, grid.ntheta)))

    @classmethod
    def from_function(cls, grid, fn):
        """Sample fn(r, theta) -> scalar array or (ncomp, ...) stack on both phases."""
        rr1, tt1 = np.meshgrid(grid.p1.r, grid.theta, indexing="ij")
        rr2, tt2 = np.meshgrid(grid.p2.r, grid.theta, indexing="ij")
        d1 = np.asarray(fn(rr1, tt1), dtype=float)
        d2 = np.asarray(fn(rr2, tt2), dtype=float)
        return cls(grid, d1, d2)

    @property
    def ncomp(self):
        return self.data1.shape[0]

    def trace_inner(self):
        """One-sided limit at R from the dispersed phase, shape (ncomp, ntheta)."""
        return self.data1[:, -1, :]

    def trace_outer(self):
        """One-sided limit at R from the continuous phase."""
        return self.data2[:, 0, :]

    def copy(self):
        return BulkField(self.grid, self.data1.copy(), self.data2.copy())

    def __add__(self, other):
        return BulkField(self.grid, self.data1 + other.data1, self.data2 + other.data2)

    def __sub__(self, other):
        return BulkField(self.grid, self.data1 - other.data1, self.data2 - other.data2)

    def __mul__(self, s):
        return BulkField(self.grid, self.data1 * s, self.data2 * s)

    __rmul__ = __mul__

    def max_abs(self):
        return max(np.max(np.abs(self.data1)), np.max(np.abs(self.data2)))


def polar_to_cart(vr, vt, theta):
    c, s = np.cos(theta), np.sin(theta)
    return vr * c - vt * s, vr * s + vt * c


def cart_to_polar(vx, vy, theta):
    c, s = np.cos(theta), np.sin(theta)
    return vx * c + vy * s, -vx * s + vy * c


@dataclass(frozen=True)
class PhaseParams:
    """Densities, viscosities and surface tension; all strictly positive."""

    rho1: float = 1.0
    rho2: float = 1.0
    mu1: float = 1.0
    mu2: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        for name in ("rho1", "rho2", "mu1", "mu2", "sigma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def rho(self, phase):
        return self.rho1 if phase == 1 else self.rho2

    def mu(self, phase):
        return self.mu1 if phase == 1 else self.mu2
