"""Semi-implicit time integration of the fixed-domain two-phase flow.

One step advances the constant-coefficient principal part implicitly
(backward Euler on the coupled velocity-pressure-height saddle, including
the stiff surface-tension coupling through the curvature linearization)
while every pullback correction, the stress-jump remainders, the curvature
remainder and the kinematic remainder are evaluated at the current state
and enter the implicit solve as data.  This mirrors the fixed-point
splitting of the quasilinear problem: principal linear part on the left,
quadratically small remainder on the right.

The pressure is not a prognostic variable: each step's implicit solve
produces the end-of-step pressure, and :func:`reconstruct_pressure`
recovers it from (u, h) alone when needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .equilibria import ball_condition, fit_ball
from .fields import BulkField, PhaseParams, make_grid
from .geometry import Geometry, InvalidHeightError, jacobian_grid
from .surface import HeightField, curvature_full, g_gamma, normal_perturbed
from .stokes import (
    StateZ,
    _remove_constant,
    _solve_mode,
    saddle_factors,
    saddle_rhs_layout,
    unpack_saddle,
)
from .transform import (
    _grad_matrix,
    _vector_cart,
    build_bundle,
    divergence_defect,
    kinematic_rhs,
    momentum_rhs,
    stress_jump_rhs,
)
from .transmission import interface_jump


@dataclass
class EvolutionConfig:
    """Time-stepping controls.

    ``mode`` selects whether the quadratic transport term enters the
    explicit remainder; ``amplitude_guard`` is the admissible fraction of
    the tube half-width (strictly below 1/3).
    """

    dt: float = 0.02
    t_end: float = 10.0
    mode: str = "stokes"
    amplitude_guard: float = 1.0 / 3.0
    cadence: int = 10
    store_states: bool = False
    picard_sweeps: int = 2

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        if self.mode not in ("stokes", "navier-stokes"):
            raise ValueError("mode must be 'stokes' or 'navier-stokes'")
        if not 0 < self.amplitude_guard <= 1.0 / 3.0:
            raise ValueError("amplitude_guard must lie in (0, 1/3]")
        if self.picard_sweeps < 1:
            raise ValueError("need at least one sweep")


@dataclass
class CompatibilityReport:
    residuals: dict
    tolerances: dict
    passed: bool

    def __str__(self):
        lines = [f"  {k}: {v:.3e} (tol {self.tolerances[k]:.1e})" for k, v in self.residuals.items()]
        return "compatibility " + ("PASS" if self.passed else "FAIL") + "\n" + "\n".join(lines)


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)   # dict per output time
    states: list = field(default_factory=list)        # (t, StateZ) if stored
    termination: str = "t_end"
    final_state: StateZ = None

    def column(self, name):
        return np.array([d[name] for d in self.diagnostics])


def validate_initial_data(geom: Geometry, params: PhaseParams, u0: BulkField, h0: HeightField,
                          tol=1e-6) -> CompatibilityReport:
    """Residuals of the initial-data constraints, transformed to the fixed domain.

    Checks the transformed divergence, the outer no-slip wall, velocity
    continuity at the interface and the tangential part of the viscous
    stress jump on the moved interface.
    """
    grid = make_grid(geom)
    bundle = build_bundle(geom, grid, h0)
    scale = max(u0.max_abs(), 1.0)
    defect = divergence_defect(bundle, u0)
    div_res = 0.0
    for phase in (1, 2):
        dat = u0.data1 if phase == 1 else u0.data2
        r = (grid.p1 if phase == 1 else grid.p2).r[:, None]
        div = grid.dr(dat[0], phase, 1, 4, polar_component=True) + dat[0] / r + grid.dtheta(dat[1]) / r
        ddat = defect.data1 if phase == 1 else defect.data2
        div_res = max(div_res, np.max(np.abs(div - ddat[0])))
    g_tau, _ = stress_jump_rhs(bundle, h0, u0, params)
    shear = _shear_jump(grid, params, u0)
    residuals = {
        "divergence": div_res / scale,
        "no_slip": np.max(np.abs(u0.data2[:, -1, :])) / scale,
        "velocity_jump": np.max(np.abs(u0.trace_outer() - u0.trace_inner())) / scale,
        "tangential_stress": np.max(np.abs(-shear - g_tau)) / scale,
    }
    tols = {k: tol for k in residuals}
    tols["tangential_stress"] = max(tol, 1e-3)  # one-sided gradients at coarse grids
    return CompatibilityReport(residuals, tols, all(residuals[k] <= tols[k] for k in residuals))


def _shear_jump(grid, params, u):
    """[[2 mu E_rtheta]] at the interface from one-sided radial stencils."""
    R = grid.geom.R
    out = []
    for phase, idx in ((1, -1), (2, 0)):
        dat = u.data1 if phase == 1 else u.data2
        dvt = grid.dr(dat[1], phase, 1, 4, polar_component=True)[idx]
        out.append(grid.dtheta(dat[0])[idx] / R + dvt - dat[1][idx] / R)
    return params.mu2 * out[1] - params.mu1 * out[0]


def _normal_strain_jump(grid, params, u):
    """[[2 mu dv_r/dr]] at the interface."""
    out = []
    for phase, idx in ((1, -1), (2, 0)):
        dat = u.data1 if phase == 1 else u.data2
        out.append(2.0 * grid.dr(dat[0], phase, 1, 4, polar_component=True)[idx])
    return params.mu2 * out[1] - params.mu1 * out[0]


def height_rate(h: HeightField, u: BulkField) -> HeightField:
    """dh/dt from the kinematic condition: normal trace plus the slope remainder."""
    ur = 0.5 * (u.trace_inner()[0] + u.trace_outer()[0])
    vals = ur + kinematic_rhs(h, u)
    return HeightField.from_values(vals, h.R)


def step_imex(geom: Geometry, params: PhaseParams, state: StateZ, config: EvolutionConfig) -> StateZ:
    """One backward-Euler step of the principal part with explicit remainders.

    The remainder is evaluated at the current state for the predictor
    solve; each further Picard sweep re-evaluates it at the predicted end
    state and repeats the implicit solve, walking toward the fixed point
    of the fully implicit step.  Two sweeps (the default) make the phase
    volume defect second order in dt while the scheme stays first order.
    """
    grid = make_grid(geom)
    if state.h.max_abs() >= config.amplitude_guard * geom.a:
        raise InvalidHeightError("amplitude guard breached")
    new = state
    for _ in range(config.picard_sweeps):
        new = _imex_solve(geom, params, state, new, config)
    return new


def _imex_solve(geom: Geometry, params: PhaseParams, state: StateZ, data_state: StateZ,
                config: EvolutionConfig) -> StateZ:
    """Implicit solve from ``state`` with remainders evaluated at ``data_state``."""
    grid = make_grid(geom)
    h, u = state.h, state.u
    hd, ud, pid = data_state.h, data_state.u, data_state.pi
    dht = height_rate(hd, ud)
    bundle = build_bundle(geom, grid, hd, dht)
    convection = config.mode == "navier-stokes"
    N1 = momentum_rhs(bundle, ud, pid, params, convection=convection)
    N2 = divergence_defect(bundle, ud)
    g_tau, g_nu = stress_jump_rhs(bundle, hd, ud, params)
    g_nu = g_nu + g_gamma(hd, params.sigma)
    g_h = kinematic_rhs(hd, ud)

    dt = config.dt
    fac = saddle_factors(geom, params, 1.0 / dt, True, dt)
    lay = saddle_rhs_layout(grid)
    n1, n2 = grid.p1.n, grid.p2.n
    nm = grid.ntheta // 2 + 1
    N = 3 * (n1 + n2) + 1

    rf = lambda arr: np.fft.rfft(arr, axis=-1)
    m1r = rf(params.rho1 * u.data1[0] / dt + N1.data1[0])
    m1t = rf(params.rho1 * u.data1[1] / dt + N1.data1[1])
    m2r = rf(params.rho2 * u.data2[0] / dt + N1.data2[0])
    m2t = rf(params.rho2 * u.data2[1] / dt + N1.data2[1])
    d1 = rf(N2.data1[0])
    d2 = rf(N2.data2[0])
    gt = np.fft.rfft(g_tau)
    gn = np.fft.rfft(g_nu)
    gh = np.fft.rfft(g_h)

    sol = np.zeros((N, nm), dtype=complex)
    for k in range(nm):
        rhs = np.zeros(N, dtype=complex)
        rhs[lay["mom1r"] : lay["mom1r"] + n1 - 1] = m1r[: n1 - 1, k]
        rhs[lay["mom1t"] : lay["mom1t"] + n1 - 1] = m1t[: n1 - 1, k]
        rhs[lay["div1"] : lay["div1"] + n1] = d1[:, k]
        rhs[lay["mom2r"] : lay["mom2r"] + n2 - 2] = m2r[1 : n2 - 1, k]
        rhs[lay["mom2t"] : lay["mom2t"] + n2 - 2] = m2t[1 : n2 - 1, k]
        rhs[lay["div2"] : lay["div2"] + n2] = d2[:, k]
        rhs[lay["g_tau"]] = gt[k]
        rhs[lay["g_nu"]] = gn[k]
        rhs[lay["height"]] = h.coeffs[k] + dt * gh[k]
        sol[:, k] = _solve_mode(fac[k], rhs)
    u_new, pi_new, h_hat = unpack_saddle(grid, sol, with_height=True)
    pi_new = _remove_constant(grid, params, pi_new)
    h_new = HeightField(h_hat, h.R, grid.ntheta)
    return StateZ(u_new, pi_new, interface_jump(pi_new), h_new)


def reconstruct_pressure(geom: Geometry, params: PhaseParams, u: BulkField, h: HeightField,
                         convection=False) -> BulkField:
    """Pressure from the state alone, via the weak transmission problem.

    The bulk source is (mu/rho) lap u (minus transport in Navier-Stokes
    mode) and the interface value jump is the full stress balance on the
    moved interface: sigma * full curvature plus the viscous normal jump
    of the pulled-back gradient.
    """
    grid = make_grid(geom)
    nm = grid.ntheta // 2 + 1
    bundle = build_bundle(geom, grid, h)
    alpha, beta, nu = normal_perturbed(h)

    f_parts = {}
    for phase in (1, 2):
        dat = u.data1 if phase == 1 else u.data2
        mu = params.mu(phase)
        rho = params.rho(phase)
        ux, uy = _vector_cart(grid, u, phase)
        G = _grad_matrix(grid, phase, ux, uy)
        th = grid.theta[None, :]
        c, s = np.cos(th), np.sin(th)
        # scalar laplacian of the cartesian components
        def lap(f):
            fr = grid.dr(f, phase, 1, 4)
            frr = grid.dr(f, phase, 2, 4)
            r = (grid.p1 if phase == 1 else grid.p2).r[:, None]
            return frr + fr / r + grid.dtheta(f, 2) / r**2
        lx, ly = lap(ux), lap(uy)
        fx = mu / rho * lx
        fy = mu / rho * ly
        if convection:
            uvec = np.stack([ux, uy], axis=-1)
            conv = np.einsum("...ij,...j->...i", G, uvec)
            fx = fx - conv[..., 0]
            fy = fy - conv[..., 1]
        f_parts[phase] = np.stack([fx * c + fy * s, -fx * s + fy * c])

    f = BulkField(grid, f_parts[1], f_parts[2])
    # full normal-stress jump on the moved interface
    jump = params.sigma * curvature_full(h) + _transformed_normal_jump(grid, params, bundle, u, nu)
    from .transmission import solve_weak

    qt = solve_weak(geom, params, f, jump)
    pi = BulkField(grid, params.rho1 * qt.data1, params.rho2 * qt.data2)
    return _remove_constant(grid, params, pi)


def _transformed_normal_jump(grid, params, bundle, u, nu):
    """([[mu(D + D^T)]] nu | nu) with D the pulled-back velocity gradient trace."""
    out = []
    for phase, idx in ((1, -1), (2, 0)):
        ux, uy = _vector_cart(grid, u, phase)
        G = _grad_matrix(grid, phase, ux, uy)[idx]
        K = bundle.K[phase][idx]
        D = np.einsum("tik,tkj->tij", G, K)
        mu = params.mu(phase)
        th = grid.theta
        nvec = np.stack([nu[0] * np.cos(th) - nu[1] * np.sin(th),
                         nu[0] * np.sin(th) + nu[1] * np.cos(th)], axis=-1)
        Sn = np.einsum("tij,tj->ti", mu * (D + D.transpose(0, 2, 1)), nvec)
        out.append(np.einsum("ti,ti->t", Sn, nvec))
    return out[1] - out[0]


def diagnostics(geom: Geometry, params: PhaseParams, state: StateZ) -> dict:
    """Energy, dissipation, dispersed-phase area and peak speed of a state.

    The energy is the kinetic part plus surface tension times the moved
    interface length; volume and length are spectrally exact quadratures
    in the angle, and bulk integrals carry the Jacobian of the interface
    map.
    """
    grid = make_grid(geom)
    h, u = state.h, state.u
    det = {p: _det_jac(geom, grid, h, p) for p in (1, 2)}
    kin = 0.5 * grid.integrate(
        params.rho1 * (u.data1[0] ** 2 + u.data1[1] ** 2),
        params.rho2 * (u.data2[0] ** 2 + u.data2[1] ** 2),
        det[1],
        det[2],
    )
    m = 4 * grid.ntheta
    hv = h.values(m)
    dv = h.deriv_values(m)
    length = np.sum(np.sqrt((h.R + hv) ** 2 + dv**2)) * (2 * np.pi / m)
    volume1 = 0.5 * np.sum((h.R + h.values()) ** 2) * (2 * np.pi / grid.ntheta)
    bundle = build_bundle(geom, grid, h)
    diss = 0.0
    parts = {}
    for phase in (1, 2):
        ux, uy = _vector_cart(grid, u, phase)
        G = _grad_matrix(grid, phase, ux, uy)
        D = G @ bundle.K[phase]
        E = 0.5 * (D + np.swapaxes(D, -1, -2))
        parts[phase] = 2.0 * params.mu(phase) * np.einsum("...ij,...ij->...", E, E)
    diss = grid.integrate(parts[1], parts[2], det[1], det[2])
    return {
        "phi": kin + params.sigma * length,
        "kinetic": kin,
        "dissipation": diss,
        "volume1": volume1,
        "max_velocity": float(max(np.max(np.hypot(u.data1[0], u.data1[1])),
                                  np.max(np.hypot(u.data2[0], u.data2[1])))),
    }


def _det_jac(geom, grid, h, phase):
    pg = grid.p1 if phase == 1 else grid.p2
    jp = jacobian_grid(geom, h, pg.r, grid.theta)
    return (1 + jp[..., 0, 0]) * (1 + jp[..., 1, 1]) - jp[..., 0, 1] * jp[..., 1, 0]


def initial_state(geom: Geometry, params: PhaseParams, u0: BulkField, h0: HeightField,
                  convection=False) -> StateZ:
    pi0 = reconstruct_pressure(geom, params, u0, h0, convection)
    return StateZ(u0, pi0, interface_jump(pi0), h0)


def run(geom: Geometry, params: PhaseParams, config: EvolutionConfig,
        u0: BulkField, h0: HeightField, validate=True, progress=None) -> Trajectory:
    """Integrate from (u0, h0) until t_end, a guard breach or solver failure.

    Diagnostics (energy, dissipation, dispersed area, peak speed, fitted
    ball data, tangent-ball radius) are recorded every ``cadence`` steps;
    the termination reason is stored on the returned trajectory.
    """
    grid = make_grid(geom)
    if validate:
        report = validate_initial_data(geom, params, u0, h0)
        if not report.passed:
            raise ValueError(f"initial data rejected:\n{report}")
    if h0.max_abs() >= config.amplitude_guard * geom.a:
        raise InvalidHeightError("initial height exceeds the amplitude guard")
    state = initial_state(geom, params, u0, h0, config.mode == "navier-stokes")
    traj = Trajectory()
    nsteps = int(round(config.t_end / config.dt))

    def record(t, st):
        d = diagnostics(geom, params, st)
        fit = fit_ball(st.h, geom)
        d.update(
            t=t,
            ball_center_x=fit.center[0],
            ball_center_y=fit.center[1],
            ball_radius=fit.radius,
            ball_residual=fit.residual,
            ball_condition_r=ball_condition(st.h, geom),
        )
        traj.times.append(t)
        traj.diagnostics.append(d)
        if config.store_states:
            traj.states.append((t, st))

    record(0.0, state)
    t = 0.0
    for m in range(1, nsteps + 1):
        try:
            state = step_imex(geom, params, state, config)
        except InvalidHeightError:
            traj.termination = "amplitude_guard"
            break
        except (sla.LinAlgError, np.linalg.LinAlgError):
            traj.termination = "solver_failure"
            break
        t = m * config.dt
        if m % config.cadence == 0 or m == nsteps:
            record(t, state)
        if progress and m % progress == 0:
            print(f"  t={t:.3f}  |h|={state.h.max_abs():.3e}  "
                  f"umax={state.u.max_abs():.3e}", flush=True)
    traj.final_state = state
    return traj
