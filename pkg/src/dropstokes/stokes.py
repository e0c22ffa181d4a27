"""Linearized two-phase Stokes machinery around the circular equilibrium.

Rotation invariance of the reference state block-diagonalizes everything
over angular Fourier modes: mode k couples only the radial profiles of
(v_r, v_theta, pi) in both phases and the single interface amplitude h_k.
Three entry points build on the same per-mode radial stencils:

* :func:`pressure_from_velocity` eliminates the pressure through the weak
  transmission solve with value jump [[q]] = [[2 mu dv_r/dr]] + sigma*A h,
  where A is the curvature linearization (mode symbol (1-k^2)/R^2);
* :func:`apply_A` / :func:`spectrum` realize the evolution operator
  A(v,h) = (-(mu/rho) lap v + grad(q)/rho, -v_r|_R) on the constrained
  subspace (divergence-free, continuous across the interface, no-slip
  outer wall, zero tangential viscous jump) and diagonalize it: the kernel
  has dimension 3 (one area mode, two translation modes) and the rest of
  the spectrum has positive real part, so the flow decays on the range;
* :func:`solve_stationary` solves the shifted stationary problem
  rho*omega*u - mu lap u + grad pi = 0 with prescribed divergence and
  interface traction data (no height coupling).

The time stepper in :mod:`dropstokes.evolution` reuses the same saddle
assembly with the height row appended.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .fields import BulkField, PhaseParams, TwoPhaseGrid, make_grid
from .geometry import Geometry
from .surface import HeightField
from .transmission import _mode_factors, _mode_solve


class DomainConditionError(ValueError):
    """State violates the operator's domain conditions beyond tolerance."""


@dataclass
class StateZ:
    """Discrete solution tuple (velocity, pressure, pressure jump, height)."""

    u: BulkField
    pi: BulkField
    q: np.ndarray
    h: HeightField

    def validate(self, tol=1e-8):
        """Check the trace conditions: [[u]] = 0, no-slip wall, q = [[pi]]."""
        jump = np.max(np.abs(self.u.trace_outer() - self.u.trace_inner()))
        wall = np.max(np.abs(self.u.data2[:, -1, :]))
        qres = np.max(np.abs((self.pi.trace_outer() - self.pi.trace_inner())[0] - self.q))
        scale = max(self.u.max_abs(), 1.0)
        return {"velocity_jump": jump / scale, "no_slip": wall / scale, "pressure_jump": qres / max(np.max(np.abs(self.q)), 1.0)}


# ---------------------------------------------------------------------------
# per-mode stencil helpers
# ---------------------------------------------------------------------------

class ModeStencils:
    """Folded radial operators for one angular mode."""

    def __init__(self, grid: TwoPhaseGrid, k: int):
        self.grid = grid
        self.k = k
        scal = (-1.0) ** k
        self.D1v = grid.fold_mode(1, 2, -scal)   # polar vector components
        self.D2v = grid.fold_mode(2, 2, -scal)
        self.D1s = grid.fold_mode(1, 2, scal)    # scalars
        self.D2s = grid.fold_mode(2, 2, scal)
        # wider stencils for the inner-phase momentum rows: the 1/r weights
        # near the pole eat two orders, so 4th-order windows keep the rows
        # second-order accurate there
        self.D1v4 = grid.fold_mode(1, 4, -scal)
        self.D2v4 = grid.fold_mode(2, 4, -scal)
        self.D1o = grid.deriv_matrix(2, 1, 2)    # outer phase (no ghosts)
        self.D2o = grid.deriv_matrix(2, 2, 2)

    def vector_laplacian(self, a1, b1, a2, b2):
        """Polar-mode vector Laplacian on both phases."""
        g = self.grid
        k = self.k
        out = []
        for (a, b, D1, D2, r) in (
            (a1, b1, self.D1v4, self.D2v4, g.p1.r),
            (a2, b2, self.D1o, self.D2o, g.p2.r),
        ):
            lap_a = D2 @ a + (D1 @ a) / r - (k**2 + 1) / r**2 * a - 2j * k / r**2 * b
            lap_b = D2 @ b + (D1 @ b) / r - (k**2 + 1) / r**2 * b + 2j * k / r**2 * a
            out += [lap_a, lap_b]
        return out

    def scalar_gradient(self, q1, q2):
        g = self.grid
        k = self.k
        return (
            self.D1s @ q1,
            1j * k / g.p1.r * q1,
            self.D1o @ q2,
            1j * k / g.p2.r * q2,
        )

    def shear_trace(self, a, b, phase):
        """2*E_rtheta = ik/R a + b' - b/R, one-sided at the interface node."""
        g = self.grid
        R = g.geom.R
        if phase == 1:
            return 1j * self.k / R * a[-1] + (self.D1v[-1] @ b) - b[-1] / R
        return 1j * self.k / R * a[0] + (self.D1o[0] @ b) - b[0] / R

    def normal_strain_trace(self, a, phase):
        """dv_r/dr one-sided at the interface node."""
        if phase == 1:
            return self.D1v[-1] @ a
        return self.D1o[0] @ a


@lru_cache(maxsize=64)
def _stencils(geom: Geometry, k: int):
    return ModeStencils(make_grid(geom), k)


def curvature_symbol(geom: Geometry, k):
    """Mode multiplier of the curvature linearization, (1 - k^2)/R^2."""
    return (1.0 - np.asarray(k, dtype=float) ** 2) / geom.R**2


# ---------------------------------------------------------------------------
# pressure elimination (weak transmission solve per mode)
# ---------------------------------------------------------------------------

def _weak_mode(geom, params, st: ModeStencils, f_modes, g_k):
    """Weak transmission solve for one mode: f vector source, [[rho qt]] = g_k.

    Returns qt = q/rho on both phases, so grad(qt) is (1/rho) grad(q).
    """
    grid = st.grid
    n1, n2 = grid.p1.n, grid.p2.n
    fr1, ft1, fr2, ft2 = f_modes
    k = st.k
    div1 = st.D1v @ fr1 + fr1 / grid.p1.r + 1j * k * ft1 / grid.p1.r
    div2 = st.D1o @ fr2 + fr2 / grid.p2.r + 1j * k * ft2 / grid.p2.r
    rhs = np.zeros(n1 + n2, dtype=complex)
    rhs[: n1 - 1] = -div1[: n1 - 1]
    rhs[n1 - 1] = g_k
    rhs[n1] = fr2[0] - fr1[-1]
    rhs[n1 + 1 : n1 + n2 - 1] = -div2[1:-1]
    rhs[-1] = fr2[-1]
    fac = _mode_factors(geom, params, 0.0, "neumann")[k]
    sol = _mode_solve(fac, rhs)
    return sol[:n1], sol[n1:]


def pressure_from_velocity(geom: Geometry, params: PhaseParams, v: BulkField, h: HeightField) -> BulkField:
    """Pressure induced by a velocity-height pair around the equilibrium.

    Solves the weak transmission problem with source (mu/rho) lap v and
    value jump [[q]] = [[2 mu dv_r/dr]] + sigma * (curvature linearization
    of h), then rescales by rho and removes the additive constant against
    the kernel-field pairing.
    """
    grid = make_grid(geom)
    nm = grid.ntheta // 2 + 1
    a1 = np.fft.rfft(v.data1[0], axis=-1)
    b1 = np.fft.rfft(v.data1[1], axis=-1)
    a2 = np.fft.rfft(v.data2[0], axis=-1)
    b2 = np.fft.rfft(v.data2[1], axis=-1)
    hk = h.coeffs if h is not None else np.zeros(nm, dtype=complex)
    q1 = np.zeros((grid.p1.n, nm), dtype=complex)
    q2 = np.zeros((grid.p2.n, nm), dtype=complex)
    for k in range(nm):
        st = _stencils(geom, k)
        la1, lb1, la2, lb2 = st.vector_laplacian(a1[:, k], b1[:, k], a2[:, k], b2[:, k])
        f_modes = (
            params.mu1 / params.rho1 * la1,
            params.mu1 / params.rho1 * lb1,
            params.mu2 / params.rho2 * la2,
            params.mu2 / params.rho2 * lb2,
        )
        g_k = (
            2 * params.mu2 * st.normal_strain_trace(a2[:, k], 2)
            - 2 * params.mu1 * st.normal_strain_trace(a1[:, k], 1)
            + params.sigma * curvature_symbol(geom, k) * hk[k]
        )
        qt1, qt2 = _weak_mode(geom, params, st, f_modes, g_k)
        q1[:, k] = params.rho1 * qt1
        q2[:, k] = params.rho2 * qt2
    q = BulkField(grid, np.fft.irfft(q1, grid.ntheta, axis=-1)[None], np.fft.irfft(q2, grid.ntheta, axis=-1)[None])
    return _remove_constant(grid, params, q)


def _remove_constant(grid, params, q):
    """Normalize the global pressure constant against the kernel field."""
    from .transmission import one_rho

    ind = one_rho(grid, params)
    num = grid.integrate(q.data1[0] * ind.data1[0], q.data2[0] * ind.data2[0])
    den = grid.integrate(ind.data1[0], ind.data2[0])
    return BulkField(grid, q.data1 - num / den, q.data2 - num / den)


# ---------------------------------------------------------------------------
# the evolution operator A on the constrained subspace
# ---------------------------------------------------------------------------

def _constraint_matrix(geom: Geometry, params: PhaseParams, k: int):
    """Rows spanning the conditions a mode-k state (v, h) must satisfy.

    divergence-free at every node, velocity continuous at the interface,
    no-slip outer wall, zero tangential viscous stress jump.
    """
    grid = make_grid(geom)
    st = _stencils(geom, k)
    n1, n2 = grid.p1.n, grid.p2.n
    N = 2 * n1 + 2 * n2 + 1
    ia1, ib1, ia2, ib2, ih = 0, n1, 2 * n1, 2 * n1 + n2, N - 1
    C = np.zeros((n1 + n2 + 5, N), dtype=complex)
    r1, r2 = grid.p1.r, grid.p2.r
    for j in range(n1):
        C[j, ia1 : ia1 + n1] = st.D1v[j]
        C[j, ia1 + j] += 1.0 / r1[j]
        C[j, ib1 + j] = 1j * k / r1[j]
    for j in range(n2):
        C[n1 + j, ia2 : ia2 + n2] = st.D1o[j]
        C[n1 + j, ia2 + j] += 1.0 / r2[j]
        C[n1 + j, ib2 + j] = 1j * k / r2[j]
    row = n1 + n2
    C[row, ia2] = 1.0
    C[row, ia1 + n1 - 1] = -1.0
    C[row + 1, ib2] = 1.0
    C[row + 1, ib1 + n1 - 1] = -1.0
    C[row + 2, ia2 + n2 - 1] = 1.0
    C[row + 3, ib2 + n2 - 1] = 1.0
    # [[2 mu E_rtheta]] = 0
    R = geom.R
    C[row + 4, ia2] = params.mu2 * 1j * k / R
    C[row + 4, ib2 : ib2 + n2] = params.mu2 * st.D1o[0]
    C[row + 4, ib2] += -params.mu2 / R
    C[row + 4, ia1 + n1 - 1] = -params.mu1 * 1j * k / R
    C[row + 4, ib1 : ib1 + n1] -= params.mu1 * st.D1v[-1]
    C[row + 4, ib1 + n1 - 1] -= -params.mu1 / R
    return C


def apply_A_mode(geom: Geometry, params: PhaseParams, k: int, y):
    """Action of the evolution operator on one mode-k coefficient vector.

    y stacks (v_r, v_theta) profiles of both phases and the height
    amplitude; the result has the same layout.
    """
    grid = make_grid(geom)
    st = _stencils(geom, k)
    n1, n2 = grid.p1.n, grid.p2.n
    a1, b1 = y[:n1], y[n1 : 2 * n1]
    a2, b2 = y[2 * n1 : 2 * n1 + n2], y[2 * n1 + n2 : 2 * n1 + 2 * n2]
    hk = y[-1]
    la1, lb1, la2, lb2 = st.vector_laplacian(a1, b1, a2, b2)
    w = (
        params.mu1 / params.rho1 * la1,
        params.mu1 / params.rho1 * lb1,
        params.mu2 / params.rho2 * la2,
        params.mu2 / params.rho2 * lb2,
    )
    g_k = (
        2 * params.mu2 * st.normal_strain_trace(a2, 2)
        - 2 * params.mu1 * st.normal_strain_trace(a1, 1)
        + params.sigma * curvature_symbol(geom, k) * hk
    )
    qt1, qt2 = _weak_mode(geom, params, st, w, g_k)
    gq = st.scalar_gradient(qt1, qt2)
    out = np.empty_like(y)
    out[:n1] = -w[0] + gq[0]
    out[n1 : 2 * n1] = -w[1] + gq[1]
    out[2 * n1 : 2 * n1 + n2] = -w[2] + gq[2]
    out[2 * n1 + n2 : 2 * n1 + 2 * n2] = -w[3] + gq[3]
    out[-1] = -a1[-1]
    return out


def apply_A(geom: Geometry, params: PhaseParams, v: BulkField, h: HeightField, check_domain=True, domain_tol=1e-6):
    """Field-level action of the evolution operator; returns (-dv/dt, -dh/dt).

    The state must satisfy the operator's domain conditions (velocity
    continuity, no-slip wall, zero tangential viscous jump); violations
    beyond ``domain_tol`` relative raise DomainConditionError carrying the
    residual magnitudes.  Work is done mode by mode and assembled back to
    grid values.
    """
    grid = make_grid(geom)
    if check_domain:
        scale = max(v.max_abs(), 1e-300)
        res = {
            "velocity_jump": float(np.max(np.abs(v.trace_outer() - v.trace_inner()))) / scale,
            "no_slip": float(np.max(np.abs(v.data2[:, -1, :]))) / scale,
            "shear_jump": float(np.max(np.abs(_shear_jump_grid(grid, params, v)))) / scale,
        }
        if any(r > domain_tol for r in res.values()):
            raise DomainConditionError(f"state outside the operator domain: {res}")
    nm = grid.ntheta // 2 + 1
    a1 = np.fft.rfft(v.data1[0], axis=-1)
    b1 = np.fft.rfft(v.data1[1], axis=-1)
    a2 = np.fft.rfft(v.data2[0], axis=-1)
    b2 = np.fft.rfft(v.data2[1], axis=-1)
    n1, n2 = grid.p1.n, grid.p2.n
    va1 = np.zeros_like(a1)
    vb1 = np.zeros_like(b1)
    va2 = np.zeros_like(a2)
    vb2 = np.zeros_like(b2)
    hh = np.zeros(nm, dtype=complex)
    for k in range(nm):
        y = np.concatenate([a1[:, k], b1[:, k], a2[:, k], b2[:, k], [h.coeffs[k]]])
        out = apply_A_mode(geom, params, k, y)
        va1[:, k] = out[:n1]
        vb1[:, k] = out[n1 : 2 * n1]
        va2[:, k] = out[2 * n1 : 2 * n1 + n2]
        vb2[:, k] = out[2 * n1 + n2 : 2 * n1 + 2 * n2]
        hh[k] = out[-1]
    irf = lambda c, n: np.fft.irfft(c, grid.ntheta, axis=-1)
    vdot = BulkField(grid, np.stack([irf(va1, 0), irf(vb1, 0)]), np.stack([irf(va2, 0), irf(vb2, 0)]))
    return vdot, HeightField(hh, h.R, grid.ntheta)


def _shear_jump_grid(grid, params, v):
    """[[2 mu E_rtheta]] at the interface from one-sided stencils."""
    R = grid.geom.R
    out = []
    for phase, idx in ((1, -1), (2, 0)):
        dat = v.data1 if phase == 1 else v.data2
        dvt = grid.dr(dat[1], phase, 1, 2, polar_component=True)[idx]
        out.append(grid.dtheta(dat[0])[idx] / R + dvt - dat[1][idx] / R)
    return params.mu2 * out[1] - params.mu1 * out[0]


@dataclass
class SpectrumReport:
    """Per-mode eigenvalues of the evolution operator with stability metadata.

    Eigenvalues are reported for the operator A itself (positive real part
    means the perturbation decays under the flow); modes k > 0 stand for
    the conjugate pair (k, -k) and carry multiplicity 2.
    """

    modes: list
    eigenvalues: dict          # mode -> sorted complex array (ascending real part)
    kernel_dims: dict          # mode -> kernel dimension including +-k multiplicity
    kernel_dim: int
    gap: float
    gap_mode: int
    kernel_tol: float
    semisimple: bool
    jordan_ratio: float        # max ||A^2 x|| / (gap ||A x||) over kernel candidates
    invariance_defect: float
    geometry: tuple            # (n_r1, n_r2, n_theta)

    def summary(self):
        return (
            f"kernel_dim={self.kernel_dim} gap={self.gap:.6g} (mode {self.gap_mode}) "
            f"semisimple={self.semisimple}"
        )


def spectrum(geom: Geometry, params: PhaseParams, mode_range=None, kernel_tol=1e-6) -> SpectrumReport:
    """Diagonalize the evolution operator mode by mode on the constrained subspace.

    The constrained subspace is the discrete operator domain; the operator
    is compressed onto it with an orthonormal null-space basis and
    diagonalized densely per mode.
    """
    grid = make_grid(geom)
    if mode_range is None:
        mode_range = range(0, grid.ntheta // 2 + 1)
    eigs = {}
    vecs = {}
    subs = {}
    for k in mode_range:
        C = _constraint_matrix(geom, params, k)
        Z = sla.null_space(C)
        AZ = np.column_stack([apply_A_mode(geom, params, k, Z[:, j]) for j in range(Z.shape[1])])
        Asub = Z.conj().T @ AZ
        lam, V = sla.eig(Asub)
        order = np.argsort(lam.real)
        eigs[k] = lam[order]
        vecs[k] = (Z, V[:, order])
        subs[k] = Asub
    all_eigs = np.concatenate([eigs[k] for k in mode_range])
    finite = all_eigs[np.abs(all_eigs) > 1e-9]
    positive = finite[finite.real > 0]
    gap0 = positive.real.min() if positive.size else np.inf
    kernel_dims = {}
    kdim = 0
    semis_ok = True
    jordan = 0.0
    inv_defect = 0.0
    gap = np.inf
    gap_mode = -1
    for k in mode_range:
        mult = 1 if k == 0 else 2
        mask = np.abs(eigs[k]) <= kernel_tol * gap0
        kernel_dims[k] = int(mask.sum()) * mult
        kdim += kernel_dims[k]
        rest = eigs[k][~mask]
        if rest.size:
            m = rest.real.min()
            if m < gap:
                gap, gap_mode = m, k
        if mask.any():
            Z, V = vecs[k]
            X = V[:, np.where(mask)[0]]
            AX = subs[k] @ X
            A2X = subs[k] @ AX
            nx = np.linalg.norm(X)
            semis_ok &= np.linalg.norm(AX) <= kernel_tol * gap0 * nx * 10
            if np.linalg.norm(AX) > 0:
                jordan = max(jordan, np.linalg.norm(A2X) / (gap0 * np.linalg.norm(AX)))
            proj = X @ (X.conj().T @ AX)
            inv_defect = max(inv_defect, np.linalg.norm(AX - proj) / max(nx, 1e-300))
    return SpectrumReport(
        modes=list(mode_range),
        eigenvalues=eigs,
        kernel_dims=kernel_dims,
        kernel_dim=kdim,
        gap=float(gap),
        gap_mode=gap_mode,
        kernel_tol=kernel_tol,
        semisimple=bool(semis_ok),
        jordan_ratio=float(jordan),
        invariance_defect=float(inv_defect),
        geometry=(geom.n_r1, geom.n_r2, geom.n_theta),
    )


# ---------------------------------------------------------------------------
# saddle systems (shared by the stationary solver and the time stepper)
# ---------------------------------------------------------------------------

PRESSURE_STAB = 0.25


def mode_saddle_matrix(geom: Geometry, params: PhaseParams, k: int, s_coeff: float,
                       with_height: bool = False, dt: float = None):
    """Full per-mode system in (v_r, v_theta, pi) on both phases (+ height).

    Row layout (N = 3 n1 + 3 n2 + with_height):
      momentum r/theta at interior nodes of each phase, divergence at every
      node, velocity jump (2), tangential and normal interface stress,
      no-slip wall (2), and for the stepper the backward-Euler height row
      h - dt * v_r(R) = data.  ``s_coeff`` multiplies rho*v in the momentum
      rows (1/dt for the stepper, the shift for the stationary problem).

    The equal-order collocated layout needs pressure stabilization: each
    divergence row carries a consistent -c*dr^2/mu * lap(pi) term that
    bounds the inverse uniformly in the grid (without it the scheme drops
    to first order).  Piecewise-constant pressures are annihilated by the
    term, so equilibrium states stay exact.
    """
    grid = make_grid(geom)
    st = _stencils(geom, k)
    n1, n2 = grid.p1.n, grid.p2.n
    N = 3 * (n1 + n2) + (1 if with_height else 0)
    ia1, ib1, ip1 = 0, n1, 2 * n1
    ia2, ib2, ip2 = 3 * n1, 3 * n1 + n2, 3 * n1 + 2 * n2
    ih = N - 1
    A = np.zeros((N, N), dtype=complex)
    r1, r2 = grid.p1.r, grid.p2.r
    R = geom.R
    row = 0
    # phase 1 momentum (interior nodes only; wide stencils, see ModeStencils)
    for j in range(n1 - 1):
        A[row, ia1 : ia1 + n1] = -params.mu1 * (st.D2v4[j] + st.D1v4[j] / r1[j])
        A[row, ia1 + j] += params.rho1 * s_coeff + params.mu1 * (k**2 + 1) / r1[j] ** 2
        A[row, ib1 + j] += params.mu1 * 2j * k / r1[j] ** 2
        A[row, ip1 : ip1 + n1] = st.D1s[j]
        row += 1
    for j in range(n1 - 1):
        A[row, ib1 : ib1 + n1] = -params.mu1 * (st.D2v4[j] + st.D1v4[j] / r1[j])
        A[row, ib1 + j] += params.rho1 * s_coeff + params.mu1 * (k**2 + 1) / r1[j] ** 2
        A[row, ia1 + j] += -params.mu1 * 2j * k / r1[j] ** 2
        A[row, ip1 + j] += 1j * k / r1[j]
        row += 1
    eps1 = PRESSURE_STAB * grid.p1.dr**2 / params.mu1
    for j in range(n1):
        A[row, ia1 : ia1 + n1] = st.D1v[j]
        A[row, ia1 + j] += 1.0 / r1[j]
        A[row, ib1 + j] = 1j * k / r1[j]
        A[row, ip1 : ip1 + n1] -= eps1 * (st.D2s[j] + st.D1s[j] / r1[j])
        A[row, ip1 + j] += eps1 * k**2 / r1[j] ** 2
        row += 1
    # phase 2 momentum (interior nodes only)
    for j in range(1, n2 - 1):
        A[row, ia2 : ia2 + n2] = -params.mu2 * (st.D2o[j] + st.D1o[j] / r2[j])
        A[row, ia2 + j] += params.rho2 * s_coeff + params.mu2 * (k**2 + 1) / r2[j] ** 2
        A[row, ib2 + j] += params.mu2 * 2j * k / r2[j] ** 2
        A[row, ip2 : ip2 + n2] = st.D1o[j]
        row += 1
    for j in range(1, n2 - 1):
        A[row, ib2 : ib2 + n2] = -params.mu2 * (st.D2o[j] + st.D1o[j] / r2[j])
        A[row, ib2 + j] += params.rho2 * s_coeff + params.mu2 * (k**2 + 1) / r2[j] ** 2
        A[row, ia2 + j] += -params.mu2 * 2j * k / r2[j] ** 2
        A[row, ip2 + j] += 1j * k / r2[j]
        row += 1
    eps2 = PRESSURE_STAB * grid.p2.dr**2 / params.mu2
    for j in range(n2):
        A[row, ia2 : ia2 + n2] = st.D1o[j]
        A[row, ia2 + j] += 1.0 / r2[j]
        A[row, ib2 + j] = 1j * k / r2[j]
        A[row, ip2 : ip2 + n2] -= eps2 * (st.D2o[j] + st.D1o[j] / r2[j])
        A[row, ip2 + j] += eps2 * k**2 / r2[j] ** 2
        row += 1
    # velocity continuity
    A[row, ia2] = 1.0
    A[row, ia1 + n1 - 1] = -1.0
    row += 1
    A[row, ib2] = 1.0
    A[row, ib1 + n1 - 1] = -1.0
    row += 1
    # tangential stress: -[[2 mu E_rtheta]] = g_tau
    A[row, ia2] += -params.mu2 * 1j * k / R
    A[row, ib2 : ib2 + n2] += -params.mu2 * st.D1o[0]
    A[row, ib2] += params.mu2 / R
    A[row, ia1 + n1 - 1] += params.mu1 * 1j * k / R
    A[row, ib1 : ib1 + n1] += params.mu1 * st.D1v[-1]
    A[row, ib1 + n1 - 1] += -params.mu1 / R
    row += 1
    # normal stress: -[[2 mu dv_r/dr]] + [[pi]] - sigma*symbol*h = g_nu
    A[row, ia2 : ia2 + n2] += -2 * params.mu2 * st.D1o[0]
    A[row, ia1 : ia1 + n1] += 2 * params.mu1 * st.D1v[-1]
    A[row, ip2] = 1.0
    A[row, ip1 + n1 - 1] = -1.0
    if with_height:
        A[row, ih] = -params.sigma * curvature_symbol(geom, k)
    row += 1
    # outer wall
    A[row, ia2 + n2 - 1] = 1.0
    row += 1
    A[row, ib2 + n2 - 1] = 1.0
    row += 1
    if with_height:
        A[row, ih] = 1.0
        A[row, ia1 + n1 - 1] = -dt
        row += 1
    assert row == N
    return A


@lru_cache(maxsize=16)
def saddle_factors(geom: Geometry, params: PhaseParams, s_coeff: float,
                   with_height: bool, dt: float = None):
    """Factorizations of all per-mode saddle systems for one configuration.

    Mode 0 carries the global pressure constant in its null space and is
    handled by a pseudoinverse; all other modes are LU-factored.
    """
    grid = make_grid(geom)
    out = []
    for k in range(grid.ntheta // 2 + 1):
        A = mode_saddle_matrix(geom, params, k, s_coeff, with_height, dt)
        if k == 0:
            out.append(("pinv", np.linalg.pinv(A)))
        else:
            out.append(("lu", sla.lu_factor(A)))
    return tuple(out)


def _solve_mode(factor, rhs):
    kind, data = factor
    if kind == "pinv":
        return data @ rhs
    return sla.lu_solve(data, rhs)


def saddle_rhs_layout(grid):
    """Starting offsets of the row groups in the saddle right-hand side."""
    n1, n2 = grid.p1.n, grid.p2.n
    mom1r = 0
    mom1t = n1 - 1
    div1 = 2 * (n1 - 1)
    mom2r = div1 + n1
    mom2t = mom2r + (n2 - 2)
    div2 = mom2t + (n2 - 2)
    iface = div2 + n2
    return {"mom1r": mom1r, "mom1t": mom1t, "div1": div1, "mom2r": mom2r,
            "mom2t": mom2t, "div2": div2, "jump_r": iface, "jump_t": iface + 1,
            "g_tau": iface + 2, "g_nu": iface + 3, "wall_r": iface + 4,
            "wall_t": iface + 5, "height": iface + 6}


def solve_stationary(geom: Geometry, params: PhaseParams, omega: float,
                     f_d: BulkField = None, g_tau=None, g_nu=None):
    """Stationary shifted Stokes solve with divergence and traction data.

    Solves rho*omega*u - mu lap u + grad pi = 0, div u = f_d, velocity
    continuous at the interface, prescribed tangential/normal traction
    jumps, no-slip wall.  Returns (u, pi, q) with q the pressure jump
    trace; the global pressure constant is normalized against the kernel
    field.  Raises a conditioning error if the shift leaves the system
    near-singular.
    """
    if omega <= 0:
        raise ValueError("shift omega must be positive")
    grid = make_grid(geom)
    n1, n2 = grid.p1.n, grid.p2.n
    lay = saddle_rhs_layout(grid)
    N = 3 * (n1 + n2)
    fac = saddle_factors(geom, params, float(omega), False, None)
    fd1 = np.fft.rfft(f_d.data1[0], axis=-1) if f_d is not None else np.zeros((n1, grid.ntheta // 2 + 1))
    fd2 = np.fft.rfft(f_d.data2[0], axis=-1) if f_d is not None else np.zeros((n2, grid.ntheta // 2 + 1))
    gt = np.fft.rfft(np.asarray(g_tau, dtype=float)) if g_tau is not None else np.zeros(grid.ntheta // 2 + 1)
    gn = np.fft.rfft(np.asarray(g_nu, dtype=float)) if g_nu is not None else np.zeros(grid.ntheta // 2 + 1)
    nm = grid.ntheta // 2 + 1
    sol = np.zeros((N, nm), dtype=complex)
    for k in range(nm):
        rhs = np.zeros(N, dtype=complex)
        rhs[lay["div1"] : lay["div1"] + n1] = fd1[:, k]
        rhs[lay["div2"] : lay["div2"] + n2] = fd2[:, k]
        rhs[lay["g_tau"]] = gt[k]
        rhs[lay["g_nu"]] = gn[k]
        sol[:, k] = _solve_mode(fac[k], rhs)
    u, pi = unpack_saddle(grid, sol)
    pi = _remove_constant(grid, params, pi)
    from .transmission import interface_jump

    return u, pi, interface_jump(pi)


def unpack_saddle(grid, sol, with_height=False):
    """Split stacked per-mode saddle solutions into bulk fields (and height)."""
    n1, n2 = grid.p1.n, grid.p2.n
    irf = lambda c: np.fft.irfft(c, grid.ntheta, axis=-1)
    u = BulkField(
        grid,
        np.stack([irf(sol[:n1]), irf(sol[n1 : 2 * n1])]),
        np.stack([irf(sol[3 * n1 : 3 * n1 + n2]), irf(sol[3 * n1 + n2 : 3 * n1 + 2 * n2])]),
    )
    pi = BulkField(grid, irf(sol[2 * n1 : 3 * n1])[None], irf(sol[3 * n1 + 2 * n2 : 3 * n1 + 3 * n2])[None])
    if with_height:
        return u, pi, sol[-1]
    return u, pi
