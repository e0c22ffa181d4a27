import numpy as np
from numpy.testing import assert_allclose

from dropstokes.fields import BulkField, cart_to_polar, make_grid
from dropstokes.geometry import Geometry
from dropstokes.surface import HeightField, curvature_linearized, g_gamma, normal_perturbed, curvature_full
from dropstokes.transform import (
    build_bundle,
    divergence_defect,
    kinematic_rhs,
    momentum_rhs,
    stress_jump_rhs,
)

from oracles import deformed_xy, pullback_scalar, pullback_velocity


def small_height(n, R):
    return HeightField.from_harmonics(n, R, [(2, 0.04, 0.0), (1, 0.0, 0.03)])


def test_bundle_vanishes_at_zero_height(geom_small):
    grid = make_grid(geom_small)
    h0 = HeightField.zero(geom_small.n_theta, geom_small.R)
    b = build_bundle(geom_small, grid, h0)
    for phase in (1, 2):
        assert_allclose(b.jac[phase], 0.0)
        assert_allclose(b.grad_defect[phase], 0.0, atol=1e-15)
        assert_allclose(b.hess_defect[phase], 0.0, atol=1e-15)
        assert_allclose(b.drift[phase], 0.0, atol=1e-13)
        assert_allclose(b.dt_shift[phase], 0.0)


def test_bundle_matrix_identity(geom_small):
    # I - grad_defect is the inverse-transposed map Jacobian:
    # (I - grad_defect)^T (I + jac) = I pointwise
    grid = make_grid(geom_small)
    h = small_height(geom_small.n_theta, geom_small.R)
    b = build_bundle(geom_small, grid, h)
    eye = np.eye(2)
    for phase in (1, 2):
        lhs = np.swapaxes(eye - b.grad_defect[phase], -1, -2) @ (eye + b.jac[phase])
        assert np.max(np.abs(lhs - eye)) < 1e-12


def test_bundle_time_shift_zero_without_rate(geom_small):
    grid = make_grid(geom_small)
    h = small_height(geom_small.n_theta, geom_small.R)
    b = build_bundle(geom_small, grid, h, None)
    for phase in (1, 2):
        assert_allclose(b.dt_shift[phase], 0.0)


def test_momentum_rhs_zero_cases(geom_small, params_contrast):
    grid = make_grid(geom_small)
    h = small_height(geom_small.n_theta, geom_small.R)
    b = build_bundle(geom_small, grid, h)
    u0 = BulkField.zeros(grid, 2)
    pi0 = BulkField.zeros(grid, 1)
    out = momentum_rhs(b, u0, pi0, params_contrast)
    assert out.max_abs() == 0.0

    # h = 0: all corrections vanish; Navier-Stokes mode keeps only transport
    h0 = HeightField.zero(geom_small.n_theta, geom_small.R)
    b0 = build_bundle(geom_small, grid, h0)
    rng = np.random.default_rng(1)
    u = BulkField(
        grid,
        np.einsum("c,rt->crt", rng.normal(size=2), np.ones((grid.p1.n, grid.ntheta))),
        np.einsum("c,rt->crt", rng.normal(size=2), np.ones((grid.p2.n, grid.ntheta))),
    )
    out = momentum_rhs(b0, u, pi0, params_contrast, convection=False)
    assert out.max_abs() < 1e-12

    # Navier-Stokes mode at h = 0: pure transport -rho (u.grad)u
    from oracles import pullback_velocity

    U = lambda x, y: (np.sin(x) * np.cos(y), -0.5 * np.cos(x) * np.sin(y))
    Ux = lambda x, y: (np.cos(x) * np.cos(y), 0.5 * np.sin(x) * np.sin(y))
    Uy = lambda x, y: (-np.sin(x) * np.sin(y), -0.5 * np.cos(x) * np.cos(y))
    usm = pullback_velocity(geom_small, h0, grid, U)
    out = momentum_rhs(b0, usm, pi0, params_contrast, convection=True)
    from dropstokes.fields import cart_to_polar

    for phase in (1, 2):
        pg = grid.p1 if phase == 1 else grid.p2
        rr, tt = np.meshgrid(pg.r, grid.theta, indexing="ij")
        x, y = rr * np.cos(tt), rr * np.sin(tt)
        ux, uy = U(x, y)
        uxx, uyx = Ux(x, y)
        uxy, uyy = Uy(x, y)
        rho = params_contrast.rho(phase)
        cr, ct = cart_to_polar(-rho * (ux * uxx + uy * uxy), -rho * (ux * uyx + uy * uyy), tt)
        dat = out.data1 if phase == 1 else out.data2
        assert np.max(np.abs(dat[0] - cr)) < 2e-4
        assert np.max(np.abs(dat[1] - ct)) < 2e-4


def test_pullback_consistency_orders(params_contrast):
    """Master property: transformed-equation residuals match direct evaluation."""
    params = params_contrast
    U = lambda x, y: (np.sin(x) * np.cos(y), -0.5 * np.cos(x) * np.sin(y))
    Ux = lambda x, y: (np.cos(x) * np.cos(y), 0.5 * np.sin(x) * np.sin(y))
    Uy = lambda x, y: (-np.sin(x) * np.sin(y), -0.5 * np.cos(x) * np.cos(y))
    lapU = lambda x, y: (-2 * np.sin(x) * np.cos(y), np.cos(x) * np.sin(y))
    P = lambda x, y: np.cos(x) * np.cos(2 * y)
    gradP = lambda x, y: (-np.sin(x) * np.cos(2 * y), -2 * np.cos(x) * np.sin(2 * y))
    from dropstokes.transform import _grad_cart, _vector_cart

    errs_m, errs_d = [], []
    grids = (24, 48, 96)
    for n in grids:
        geom = Geometry(R=1.0, R_Omega=2.5, a=0.9, n_theta=48, n_r1=n, n_r2=n)
        grid = make_grid(geom)
        h = small_height(48, 1.0)
        dht = HeightField.from_harmonics(48, 1.0, [(2, 0.0, 0.02)])
        bundle = build_bundle(geom, grid, h, dht)
        u = pullback_velocity(geom, h, grid, U)
        pi = pullback_scalar(geom, h, grid, P)
        N1 = momentum_rhs(bundle, u, pi, params, convection=True)
        N2 = divergence_defect(bundle, u)
        em = ed = 0.0
        for phase in (1, 2):
            x, y, tt = deformed_xy(geom, h, grid, phase)
            mu, rho = params.mu(phase), params.rho(phase)
            lux, luy = lapU(x, y)
            px, py = gradP(x, y)
            ux, uy = U(x, y)
            uxx, uyx = Ux(x, y)
            uxy, uyy = Uy(x, y)
            pg = grid.p1 if phase == 1 else grid.p2
            from dropstokes.geometry import cutoff_chi

            chi = cutoff_chi((pg.r[:, None] - geom.R) / geom.a)
            dchi = chi * dht.values()[None, :]
            ex_x = (-mu * lux + px + rho * (ux * uxx + uy * uxy)
                    - rho * (uxx * dchi * np.cos(tt) + uxy * dchi * np.sin(tt)))
            ex_y = (-mu * luy + py + rho * (ux * uyx + uy * uyy)
                    - rho * (uyx * dchi * np.cos(tt) + uyy * dchi * np.sin(tt)))
            exr, ext = cart_to_polar(ex_x, ex_y, tt)
            cx, cy = _vector_cart(grid, u, phase)

            def lap(f):
                fx, fy = _grad_cart(grid, phase, f)
                return _grad_cart(grid, phase, fx)[0] + _grad_cart(grid, phase, fy)[1]

            lr, lt = cart_to_polar(lap(cx), lap(cy), tt)
            pdat = (pi.data1 if phase == 1 else pi.data2)[0]
            gpx, gpy = _grad_cart(grid, phase, pdat)
            gpr, gpt = cart_to_polar(gpx, gpy, tt)
            N1d = N1.data1 if phase == 1 else N1.data2
            em = max(em, np.max(np.abs(-mu * lr + gpr - N1d[0] - exr)),
                     np.max(np.abs(-mu * lt + gpt - N1d[1] - ext)))
            udat = u.data1 if phase == 1 else u.data2
            r_ = pg.r[:, None]
            divu = grid.dr(udat[0], phase, 1, 4, polar_component=True) + udat[0] / r_ + grid.dtheta(udat[1]) / r_
            N2d = (N2.data1 if phase == 1 else N2.data2)[0]
            ed = max(ed, np.max(np.abs(divu - N2d - (uxx + uyy))))
        errs_m.append(em)
        errs_d.append(ed)
    sm = np.polyfit(np.log(grids), -np.log(errs_m), 1)[0]
    sd = np.polyfit(np.log(grids), -np.log(errs_d), 1)[0]
    assert sm >= 1.9, (errs_m, sm)
    assert sd >= 1.9, (errs_d, sd)


def test_divergence_defect_cases(geom_small, params_unit):
    grid = make_grid(geom_small)
    h0 = HeightField.zero(geom_small.n_theta, geom_small.R)
    b0 = build_bundle(geom_small, grid, h0)
    u = BulkField.from_function(grid, lambda r, t: np.stack([np.cos(t), -np.sin(t)]))  # constant vector e1
    assert divergence_defect(b0, u).max_abs() < 1e-15

    h = small_height(geom_small.n_theta, geom_small.R)
    b = build_bundle(geom_small, grid, h)
    # constant vector field: gradient-free, defect vanishes for any h
    assert divergence_defect(b, u).max_abs() < 1e-13

    # divergence-free field pulled back: div u - defect = 0 up to grid error
    geom = Geometry(R=1.0, R_Omega=2.5, a=0.9, n_theta=48, n_r1=128, n_r2=128)
    grid = make_grid(geom)
    h = small_height(48, 1.0)
    b = build_bundle(geom, grid, h)
    U = lambda x, y: (np.sin(y), np.cos(2 * x))
    upb = pullback_velocity(geom, h, grid, U)
    d = divergence_defect(b, upb)
    for phase in (1, 2):
        pg = grid.p1 if phase == 1 else grid.p2
        udat = upb.data1 if phase == 1 else upb.data2
        r_ = pg.r[:, None]
        divu = grid.dr(udat[0], phase, 1, 4, polar_component=True) + udat[0] / r_ + grid.dtheta(udat[1]) / r_
        dd = (d.data1 if phase == 1 else d.data2)[0]
        assert np.max(np.abs(divu - dd)) < 2e-3


def test_stress_jump_zero_cases(geom_small, params_contrast):
    grid = make_grid(geom_small)
    h = small_height(geom_small.n_theta, geom_small.R)
    b = build_bundle(geom_small, grid, h)
    gt, gn = stress_jump_rhs(b, h, BulkField.zeros(grid, 2), params_contrast)
    assert np.max(np.abs(gt)) == 0.0 and np.max(np.abs(gn)) == 0.0

    h0 = HeightField.zero(geom_small.n_theta, geom_small.R)
    b0 = build_bundle(geom_small, grid, h0)
    U = lambda x, y: (np.sin(x) * np.cos(y), -0.5 * np.cos(x) * np.sin(y))
    u = pullback_velocity(geom_small, h0, grid, U)
    gt, gn = stress_jump_rhs(b0, h0, u, params_contrast)
    assert np.max(np.abs(gt)) < 1e-12 and np.max(np.abs(gn)) < 1e-12


def test_stress_jump_manufactured_identity(params_contrast):
    """Transformed stress conditions equal the exact decomposition on the moved curve."""
    params = params_contrast
    U1 = lambda x, y: (np.sin(x) * np.cos(y), -0.5 * np.cos(x) * np.sin(y))
    U2 = lambda x, y: (0.3 * np.cos(2 * x) * y, 0.1 * np.sin(x + y))
    dU1 = lambda x, y: np.array([[np.cos(x) * np.cos(y), -np.sin(x) * np.sin(y)],
                                 [0.5 * np.sin(x) * np.sin(y), -0.5 * np.cos(x) * np.cos(y)]])
    dU2 = lambda x, y: np.array([[-0.6 * np.sin(2 * x) * y, 0.3 * np.cos(2 * x)],
                                 [0.1 * np.cos(x + y), 0.1 * np.cos(x + y)]])
    P1 = lambda x, y: np.cos(x) * np.cos(2 * y)
    P2 = lambda x, y: 0.5 * np.sin(x) * y

    errs = []
    grids = (32, 64, 128)
    for n in grids:
        geom = Geometry(R=1.0, R_Omega=2.5, a=0.9, n_theta=48, n_r1=n, n_r2=n)
        grid = make_grid(geom)
        h = small_height(48, 1.0)
        bundle = build_bundle(geom, grid, h)
        parts_u, parts_p = [], []
        for phase, (U, P) in ((1, (U1, P1)), (2, (U2, P2))):
            x, y, tt = deformed_xy(geom, h, grid, phase)
            ux, uy = U(x, y)
            vr, vt = cart_to_polar(ux, uy, tt)
            parts_u.append(np.stack([vr, vt]))
            parts_p.append(P(x, y)[None])
        u = BulkField(grid, parts_u[0], parts_u[1])
        pi = BulkField(grid, parts_p[0], parts_p[1])
        g_tau, g_nu = stress_jump_rhs(bundle, h, u, params)
        th = grid.theta
        R = geom.R

        def traces(phase):
            dat = u.data1 if phase == 1 else u.data2
            idx = -1 if phase == 1 else 0
            dvr = grid.dr(dat[0], phase, 1, 4, polar_component=True)[idx]
            dvt = grid.dr(dat[1], phase, 1, 4, polar_component=True)[idx]
            return dvr, 0.5 * (grid.dtheta(dat[0])[idx] / R + dvt - dat[1][idx] / R)

        E1rr, E1rt = traces(1)
        E2rr, E2rt = traces(2)
        pj = pi.trace_outer()[0] - pi.trace_inner()[0]
        res_nu = (-(2 * params.mu2 * E2rr - 2 * params.mu1 * E1rr) + pj
                  - params.sigma * curvature_linearized(h)) - (g_nu + g_gamma(h, params.sigma))
        res_tau = -(2 * params.mu2 * E2rt - 2 * params.mu1 * E1rt) - g_tau

        # exact residuals of the decomposed conditions on the moved interface
        alpha, beta, nu = normal_perturbed(h)
        hv = h.values()
        xs, ys = (R + hv) * np.cos(th), (R + hv) * np.sin(th)
        G1 = np.stack([dU1(x, y) for x, y in zip(xs, ys)], axis=-1)
        G2 = np.stack([dU2(x, y) for x, y in zip(xs, ys)], axis=-1)
        nvec = np.stack([np.cos(th), np.sin(th)])
        tvec = np.stack([-np.sin(th), np.cos(th)])
        avec = alpha * tvec
        S = params.mu2 * (G2 + G2.transpose(1, 0, 2)) - params.mu1 * (G1 + G1.transpose(1, 0, 2))
        Sma = np.einsum("ijt,jt->it", S, nvec - avec)
        PJ = P2(xs, ys) - P1(xs, ys)
        ex_nu = PJ - params.sigma * curvature_full(h) - np.einsum("it,it->t", Sma, nvec)
        ex_tau = -np.einsum("it,it->t", Sma, tvec) - np.einsum("it,it->t", Sma, nvec) * alpha
        errs.append(max(np.max(np.abs(res_nu - ex_nu)), np.max(np.abs(res_tau - ex_tau))))
    slope = np.polyfit(np.log(grids), -np.log(errs), 1)[0]
    assert slope >= 1.9, (errs, slope)


def test_kinematic_rhs(geom_small):
    grid = make_grid(geom_small)
    n = geom_small.n_theta
    hc = HeightField.from_harmonics(n, 1.0, [(0, 0.05, 0.0)])
    u = BulkField.from_function(grid, lambda r, t: np.stack([np.cos(t), -np.sin(t)]))
    assert np.max(np.abs(kinematic_rhs(hc, u))) < 1e-14  # constant height

    h = small_height(n, 1.0)
    u_rad = BulkField.from_function(grid, lambda r, t: np.stack([np.ones_like(t), np.zeros_like(t)]))
    assert np.max(np.abs(kinematic_rhs(h, u_rad))) < 1e-14  # radial velocity

    # translating circle: dh/dt from the operator matches the exact rate
    th = grid.theta
    for t0 in (0.02, 0.05):
        hv = t0 * np.cos(th) + np.sqrt(1.0 - t0**2 * np.sin(th) ** 2) - 1.0
        ht = HeightField.from_values(hv, 1.0)
        rate = u.trace_inner()[0] + kinematic_rhs(ht, u)
        exact = np.cos(th) - t0 * np.sin(th) ** 2 / np.sqrt(1.0 - t0**2 * np.sin(th) ** 2)
        assert np.max(np.abs(rate - exact)) < 1e-12


def test_quadratic_smallness(geom_small, params_unit):
    """All remainder components shrink like the square of the state amplitude."""
    grid = make_grid(geom_small)
    n = geom_small.n_theta
    U = lambda x, y: (np.sin(x) * np.cos(y), -0.5 * np.cos(x) * np.sin(y))
    P = lambda x, y: np.cos(x) * np.cos(2 * y)
    h1 = small_height(n, 1.0)
    u1 = pullback_velocity(geom_small, h1, grid, U)
    pi1 = pullback_scalar(geom_small, h1, grid, P)
    norms = []
    eps_list = (1.0, 0.5, 0.25)
    for eps in eps_list:
        h = h1 * eps
        b = build_bundle(geom_small, grid, h, h1 * (0.3 * eps))
        N1 = momentum_rhs(b, u1 * eps, pi1 * eps, params_unit, convection=True)
        N2 = divergence_defect(b, u1 * eps)
        gt, gn = stress_jump_rhs(b, h, u1 * eps, params_unit)
        gh = kinematic_rhs(h, u1 * eps)
        gg = g_gamma(h, 1.0) - g_gamma(HeightField.zero(n, 1.0), 1.0)
        norms.append(max(N1.max_abs(), N2.max_abs(), np.max(np.abs(gt)),
                         np.max(np.abs(gn)), np.max(np.abs(gh)), np.max(np.abs(gg))))
    slope = np.polyfit(np.log(eps_list), np.log(norms), 1)[0]
    assert slope >= 1.9, (norms, slope)


def test_bundle_smooth_dependence(geom_small):
    """Directional derivatives of bundle entries converge at second order."""
    grid = make_grid(geom_small)
    n = geom_small.n_theta
    h = small_height(n, 1.0)
    delta = HeightField.from_harmonics(n, 1.0, [(3, 1.0, 0.0)])

    def entry(hh):
        return build_bundle(geom_small, grid, hh).hess_defect[1]

    def dd(eps):
        return (entry(h + delta * eps) - entry(h + delta * (-eps))) / (2 * eps)

    d1, d2, d4 = dd(4e-3), dd(2e-3), dd(1e-3)
    e1 = np.max(np.abs(d1 - d4))
    e2 = np.max(np.abs(d2 - d4))
    assert e1 / e2 > 3.0  # leading error term scales like eps^2
