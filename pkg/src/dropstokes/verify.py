"""Config-driven verification suites: operator identities against independent oracles.

Each suite evaluates a family of checks with quantitative thresholds and
returns (name, measured, threshold, sense, passed) records; the CLI prints
one line per check and fails if any check fails.  The oracles are kept
deliberately independent of the implementation paths they test: curvature
against the classical polar-curve formula, the map Jacobian against finite
differences of the map itself, pullback operators against direct
evaluation on the deformed geometry, and the transmission solvers against
closed-form and manufactured solutions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import BulkField, PhaseParams, cart_to_polar, make_grid
from .geometry import AmbientPoint, Geometry, cutoff_chi, hanzawa_jacobian, hanzawa_map
from .surface import HeightField, curvature_full, curvature_linearized
from .transform import build_bundle, divergence_defect, momentum_rhs
from .transmission import TransmissionData, halfspace_symbol, neumann_mode_eigs, one_rho, solve_strong


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    sense: str = "<="   # "<=" or ">="

    @property
    def passed(self):
        return self.value <= self.threshold if self.sense == "<=" else self.value >= self.threshold

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: {self.value:.3e} ({self.sense} {self.threshold:.3e})"


def _slope(ns, errs):
    ns = np.asarray(ns, dtype=float)
    errs = np.asarray(errs, dtype=float)
    return float(np.polyfit(np.log(ns), -np.log(errs), 1)[0])


def curvature_suite(n_theta, seed=0):
    """Full curvature vs the polar-curve formula, and its linearization."""
    R = 1.0
    h = HeightField.from_harmonics(n_theta, R, [(2, 0.1, 0.0), (3, 0.0, 0.05)])
    th = h.values() * 0 + np.arange(n_theta) * 2 * np.pi / n_theta
    hv = h.values()
    dv = h.deriv_values()
    d2v = np.fft.irfft(h.deriv_coeffs() * 1j * np.arange(h.coeffs.shape[0]), n_theta)
    r = R + hv
    oracle = -((r**2 + 2 * dv**2 - r * d2v) / (r**2 + dv**2) ** 1.5)
    err = float(np.max(np.abs(curvature_full(h) - oracle)))
    checks = [Check("curvature vs polar oracle (max abs)", err, 1e-8)]

    lin = curvature_linearized(h)
    errs = []
    eps_list = (2e-3, 1e-3, 5e-4)
    for eps in eps_list:
        dq = (curvature_full(h * eps) - curvature_full(h * (-eps))) / (2 * eps)
        errs.append(np.max(np.abs(dq - lin)))
    slope = _slope([1 / e for e in eps_list], errs)
    checks.append(Check("curvature linearization quotient order", slope, 1.9, ">="))
    return checks


def jacobian_suite(seed=0):
    """Map Jacobian vs central finite differences of the map (Cartesian frame)."""
    geom = Geometry(R=1.0, R_Omega=2.5, n_theta=64)
    h = HeightField.from_harmonics(geom.n_theta, geom.R, [(2, 0.05, 0.0), (5, 0.0, 0.02)])
    rng = np.random.default_rng(seed)
    step = 1e-6
    worst = 0.0
    for _ in range(50):
        r = rng.uniform(0.05, geom.R_Omega * 0.98)
        t = rng.uniform(0, 2 * np.pi)
        x0, y0 = r * np.cos(t), r * np.sin(t)

        def mapped(x, y):
            p = AmbientPoint(np.hypot(x, y), np.arctan2(y, x))
            q = hanzawa_map(geom, h, p)
            return np.array(q.xy())

        fd = np.column_stack([
            (mapped(x0 + step, y0) - mapped(x0 - step, y0)) / (2 * step),
            (mapped(x0, y0 + step) - mapped(x0, y0 - step)) / (2 * step),
        ]) - np.eye(2)
        an = hanzawa_jacobian(geom, h, AmbientPoint(r, t))
        worst = max(worst, np.max(np.abs(fd - an)) / max(np.max(np.abs(an)), 1.0))
    return [Check("map Jacobian vs finite differences (rel)", worst, 1e-8)]


def _deformed_sample(geom, h, grid, phase, fn):
    pg = grid.p1 if phase == 1 else grid.p2
    rr, tt = np.meshgrid(pg.r, grid.theta, indexing="ij")
    chi = cutoff_chi((rr - geom.R) / geom.a)
    rmap = rr + chi * h.values()[None, :]
    return fn(rmap * np.cos(tt), rmap * np.sin(tt)), (rmap * np.cos(tt), rmap * np.sin(tt)), (rr, tt)


def pullback_suite(resolutions=(32, 64, 128), n_theta=48):
    """Momentum/divergence pullback residuals vs direct deformed-domain evaluation."""
    params = PhaseParams(rho1=2.0, rho2=1.0, mu1=3.0, mu2=1.0, sigma=1.0)
    U = lambda x, y: (np.sin(x) * np.cos(y), -0.5 * np.cos(x) * np.sin(y))
    Ux = lambda x, y: (np.cos(x) * np.cos(y), 0.5 * np.sin(x) * np.sin(y))
    Uy = lambda x, y: (-np.sin(x) * np.sin(y), -0.5 * np.cos(x) * np.cos(y))
    lapU = lambda x, y: (-2 * np.sin(x) * np.cos(y), np.cos(x) * np.sin(y))
    P = lambda x, y: np.cos(x) * np.cos(2 * y)
    gradP = lambda x, y: (-np.sin(x) * np.cos(2 * y), -2 * np.cos(x) * np.sin(2 * y))

    em_list, ed_list = [], []
    for n in resolutions:
        geom = Geometry(R=1.0, R_Omega=2.5, a=0.9, n_theta=n_theta, n_r1=n, n_r2=n)
        grid = make_grid(geom)
        h = HeightField.from_harmonics(n_theta, geom.R, [(2, 0.04, 0.0), (1, 0.0, 0.03)])
        dht = HeightField.from_harmonics(n_theta, geom.R, [(2, 0.0, 0.02)])
        bundle = build_bundle(geom, grid, h, dht)
        dd = {}
        for phase in (1, 2):
            (uc, _), (x, y), (rr, tt) = _deformed_sample(geom, h, grid, phase, lambda x, y: (U(x, y), 0))
            ux, uy = uc
            vr, vt = cart_to_polar(ux, uy, tt)
            dd[phase] = (np.stack([vr, vt]), P(x, y)[None])
        u = BulkField(grid, dd[1][0], dd[2][0])
        pi = BulkField(grid, dd[1][1], dd[2][1])
        N1 = momentum_rhs(bundle, u, pi, params, convection=True)
        N2 = divergence_defect(bundle, u)
        em = ed = 0.0
        from .transform import _grad_cart, _vector_cart

        for phase in (1, 2):
            pg = grid.p1 if phase == 1 else grid.p2
            rr, tt = np.meshgrid(pg.r, grid.theta, indexing="ij")
            chi = cutoff_chi((rr - geom.R) / geom.a)
            rmap = rr + chi * h.values()[None, :]
            x, y = rmap * np.cos(tt), rmap * np.sin(tt)
            mu, rho = params.mu(phase), params.rho(phase)
            lux, luy = lapU(x, y)
            px, py = gradP(x, y)
            ux, uy = U(x, y)
            uxx, uyx = Ux(x, y)
            uxy, uyy = Uy(x, y)
            conv_x = ux * uxx + uy * uxy
            conv_y = ux * uyx + uy * uyy
            dchi = chi * dht.values()[None, :]
            dtu_x = uxx * dchi * np.cos(tt) + uxy * dchi * np.sin(tt)
            dtu_y = uyx * dchi * np.cos(tt) + uyy * dchi * np.sin(tt)
            exr, ext = cart_to_polar(-mu * lux + px + rho * conv_x - rho * dtu_x,
                                     -mu * luy + py + rho * conv_y - rho * dtu_y, tt)
            udat = u.data1 if phase == 1 else u.data2
            pdat = (pi.data1 if phase == 1 else pi.data2)[0]
            cx, cy = _vector_cart(grid, u, phase)

            def lap(f):
                fx, fy = _grad_cart(grid, phase, f)
                return _grad_cart(grid, phase, fx)[0] + _grad_cart(grid, phase, fy)[1]

            lr, lt = cart_to_polar(lap(cx), lap(cy), tt)
            gpx, gpy = _grad_cart(grid, phase, pdat)
            gpr, gpt = cart_to_polar(gpx, gpy, tt)
            N1d = N1.data1 if phase == 1 else N1.data2
            em = max(em, np.max(np.abs(-mu * lr + gpr - N1d[0] - exr)),
                     np.max(np.abs(-mu * lt + gpt - N1d[1] - ext)))
            divU = uxx + uyy
            r_ = pg.r[:, None]
            divu = grid.dr(udat[0], phase, 1, 4, polar_component=True) + udat[0] / r_ + grid.dtheta(udat[1]) / r_
            N2d = (N2.data1 if phase == 1 else N2.data2)[0]
            ed = max(ed, np.max(np.abs(divu - N2d[None] - divU)))
        em_list.append(em)
        ed_list.append(ed)
    return [
        Check("pullback momentum residual order", _slope(resolutions, em_list), 1.9, ">="),
        Check("pullback divergence residual order", _slope(resolutions, ed_list), 1.9, ">="),
    ]


def transmission_suite(seed=0, resolutions=(32, 64, 128)):
    """Half-space symbol identities, manufactured convergence, kernel isolation."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100):
        lam = rng.uniform(1, 5)
        xi = rng.uniform(-3, 3)
        r1, r2 = rng.uniform(0.1, 5, size=2)
        gt, hh = rng.normal(size=2)
        L = np.sqrt(lam + xi**2)
        ap, am = halfspace_symbol(lam, xi, r1, r2, gt, hh)
        worst = max(worst, abs(r2 * ap - r1 * am - gt), abs(-L * (ap + am) - hh))
    checks = [Check("half-space symbol jump identities", worst, 1e-12)]

    params = PhaseParams(rho1=2.0, rho2=1.0)
    lam = 0.7
    errs = []
    for n in resolutions:
        geom = Geometry(R=1.0, R_Omega=2.5, n_theta=32, n_r1=n, n_r2=n)
        grid = make_grid(geom)
        th = grid.theta
        q1 = lambda r, t: r**2 * np.cos(2 * t) + 1.0
        q2 = lambda r, t: (r**2 + r**-2) * np.cos(2 * t) - 2.0
        rr1, tt1 = np.meshgrid(grid.p1.r, th, indexing="ij")
        rr2, tt2 = np.meshgrid(grid.p2.r, th, indexing="ij")
        f = BulkField(grid, lam * q1(rr1, tt1)[None], lam * q2(rr2, tt2)[None])
        data = TransmissionData(
            lam=lam,
            f=f,
            g=params.rho2 * q2(1.0, th) - params.rho1 * q1(1.0, th),
            h1=(2 * 1 - 2 * 1**-3) * np.cos(2 * th) - 2 * np.cos(2 * th),
            outer_bc="dirichlet",
            outer_datum=q2(geom.R_Omega, th),
        )
        q = solve_strong(geom, params, data)
        rr1, tt1 = np.meshgrid(grid.p1.r, th, indexing="ij")
        rr2, tt2 = np.meshgrid(grid.p2.r, th, indexing="ij")
        errs.append(max(np.max(np.abs(q.data1[0] - q1(rr1, tt1))), np.max(np.abs(q.data2[0] - q2(rr2, tt2)))))
    checks.append(Check("strong transmission manufactured order", _slope(resolutions, errs), 1.9, ">="))

    geom = Geometry(R=1.0, R_Omega=2.5, n_theta=16, n_r1=48, n_r2=48)
    lam_eigs, vecs = neumann_mode_eigs(geom, params, 0)
    ratio = abs(lam_eigs[1]) / max(abs(lam_eigs[0]), 1e-300)
    checks.append(Check("zero-shift Neumann kernel isolation (eig ratio)", float(ratio), 1e6, ">="))
    grid = make_grid(geom)
    ind = one_rho(grid, params)
    v0 = np.real(vecs[:, 0])
    v0 = v0 / v0[0]
    indvec = np.concatenate([ind.data1[0][:, 0], ind.data2[0][:, 0]])
    checks.append(Check("kernel vector matches density-ratio field", float(np.max(np.abs(v0 - indvec))), 1e-9))
    return checks


def run_all(n_theta=128, seed=0):
    checks = []
    checks += curvature_suite(n_theta, seed)
    checks += jacobian_suite(seed)
    checks += pullback_suite()
    checks += transmission_suite(seed)
    return checks
