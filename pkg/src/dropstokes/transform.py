"""Bulk pullback operators for the fixed-domain form of the flow equations.

Pulling the velocity and pressure back along the interface-fitting map
``Theta_h`` turns the equations on the moving domain into constant-domain
equations plus correction operators built from the map's Jacobian
``I + Jp`` (Jp the perturbation Jacobian, vanishing for h = 0):

* gradient/divergence correction  I - K^T          (K := (I+Jp)^(-1))
* Hessian correction              I - K K^T        (contracts with grad^2 u)
* advective drift                 c_k = sum_lj K_lj d_l K_kj
                                  (the Laplacian of the inverse map, composed
                                  with the map, written via grid derivatives
                                  of K)
* time drift                      (grad u) K dtheta_h/dt

With these, the pulled-back momentum equation reads

    rho du/dt - mu lap(u) + grad(pi) = rho (grad u) K dtTheta
                                       + mu [ (I-KK^T):grad^2 u - (c|grad) u ]
                                       + (I-K^T) grad pi
                                       [- rho (grad u) K u  in Navier-Stokes mode]

and incompressibility becomes  div u = tr(grad u (I - K)).  The interface
stress conditions decompose against the reference normal; the remainders
returned by :func:`stress_jump_rhs` restore the exact conditions on the
moved curve.  All residual identities are exercised against manufactured
solutions on the deformed geometry.
"""

from __future__ import annotations

import numpy as np

from .fields import BulkField, TwoPhaseGrid, cart_to_polar, polar_to_cart
from .geometry import (
    Geometry,
    InvalidHeightError,
    cutoff_chi,
    cutoff_chi_prime,
    cutoff_chi_second,
    jacobian_grid,
)
from .surface import HeightField, normal_perturbed, truncate_values


class GridMismatchError(ValueError):
    pass


def _check_same_grid(bundle, field):
    if field.grid is not bundle.grid:
        raise GridMismatchError("field and bundle live on different grids")


class TransformBundle:
    """Grid samples of all pullback corrections for one (h, dh/dt) pair.

    Immutable after construction; every member vanishes identically when
    h == 0.  Arrays are stored per phase with trailing tensor axes, e.g.
    ``K[phase]`` has shape (nr, ntheta, 2, 2).
    """

    def __init__(self, geom: Geometry, grid: TwoPhaseGrid, h: HeightField, dht: HeightField):
        self.geom = geom
        self.grid = grid
        self.h = h
        self.dht = dht
        self.jac = {}
        self.K = {}
        self.grad_defect = {}   # I - K^T
        self.hess_defect = {}   # I - K K^T
        self.drift = {}         # vector c, shape (nr, ntheta, 2)
        self.dt_shift = {}      # d(theta_h)/dt, shape (nr, ntheta, 2)

        eye = np.eye(2)
        dh_vals = dht.values() if dht is not None else np.zeros(grid.ntheta)
        for phase, pg in ((1, grid.p1), (2, grid.p2)):
            jp = jacobian_grid(geom, h, pg.r, grid.theta)
            det = (1 + jp[..., 0, 0]) * (1 + jp[..., 1, 1]) - jp[..., 0, 1] * jp[..., 1, 0]
            if np.any(det <= 0):
                raise InvalidHeightError("interface map loses orientation at some grid point")
            K = np.empty_like(jp)
            K[..., 0, 0] = (1 + jp[..., 1, 1]) / det
            K[..., 1, 1] = (1 + jp[..., 0, 0]) / det
            K[..., 0, 1] = -jp[..., 0, 1] / det
            K[..., 1, 0] = -jp[..., 1, 0] / det
            self.jac[phase] = jp
            self.K[phase] = K
            self.grad_defect[phase] = eye - np.swapaxes(K, -1, -2)
            self.hess_defect[phase] = eye - K @ np.swapaxes(K, -1, -2)
            self.drift[phase] = self._drift_vector(phase, pg, K)
            chi = cutoff_chi((pg.r - geom.R) / geom.a)[:, None]
            er = np.stack([np.cos(grid.theta), np.sin(grid.theta)], axis=-1)
            self.dt_shift[phase] = chi[..., None] * dh_vals[None, :, None] * er[None, :, :]

    def _drift_vector(self, phase, pg, K):
        """Analytic drift c_k = sum_lj K_lj d_l K_kj via d_l K = -K (d_l Jp) K.

        All map derivatives are closed-form (cutoff derivatives are analytic
        and the height field is spectral), so no grid differencing of the
        Jacobian is involved; this keeps the drift accurate even where the
        cutoff's higher derivatives are large.
        """
        geom, grid = self.geom, self.grid
        r = pg.r[:, None]
        th = grid.theta[None, :]
        s = (r - geom.R) / geom.a
        chi = cutoff_chi(s)
        chi_p = cutoff_chi_prime(s)
        chi_pp = cutoff_chi_second(s)
        hv = self.h.values()[None, :]
        dhv = self.h.deriv_values()[None, :]
        d2hv = np.fft.irfft(self.h.deriv_coeffs() * 1j * np.arange(self.h.coeffs.shape[0]), grid.ntheta)[None, :]

        A = chi_p * hv / geom.a
        B = chi * dhv / r
        C = chi * hv / r
        Ar = chi_pp * hv / geom.a**2
        At = chi_p * dhv / geom.a
        Br = chi_p * dhv / (geom.a * r) - chi * dhv / r**2
        Bt = chi * d2hv / r
        Cr = chi_p * hv / (geom.a * r) - chi * hv / r**2
        Ct = chi * dhv / r

        c_, s_ = np.cos(th), np.sin(th)
        zero = np.zeros_like(c_ * r)

        def basis(rr_, rt_, tr_, tt_):
            """2x2 grid tensor x*er@er + y*er@eth + z*eth@er + w*eth@eth."""
            m = np.empty(r.shape[:1] + (grid.ntheta, 2, 2))
            m[..., 0, 0] = rr_ * c_ * c_ - (rt_ + tr_) * c_ * s_ + tt_ * s_ * s_
            m[..., 0, 1] = rr_ * c_ * s_ + rt_ * c_ * c_ - tr_ * s_ * s_ - tt_ * c_ * s_
            m[..., 1, 0] = rr_ * c_ * s_ - rt_ * s_ * s_ + tr_ * c_ * c_ - tt_ * c_ * s_
            m[..., 1, 1] = rr_ * s_ * s_ + (rt_ + tr_) * c_ * s_ + tt_ * c_ * c_
            return m

        dJp_r = basis(Ar, Br, zero, Cr)
        # theta-derivative rotates the basis: d(er@er) = eth@er + er@eth, etc.
        dJp_t = basis(At - B, Bt + A - C, A - C, Ct + B)
        dJp_x = c_[..., None, None] * dJp_r - (s_ / r)[..., None, None] * dJp_t
        dJp_y = s_[..., None, None] * dJp_r + (c_ / r)[..., None, None] * dJp_t
        dK_x = -K @ dJp_x @ K
        dK_y = -K @ dJp_y @ K
        c_vec = np.empty(K.shape[:2] + (2,))
        for kk in range(2):
            c_vec[..., kk] = np.einsum("...l,...l->...", K[..., 0, :], dK_x[..., kk, :]) + np.einsum(
                "...l,...l->...", K[..., 1, :], dK_y[..., kk, :]
            )
        return c_vec

    def det_jacobian(self, phase):
        jp = self.jac[phase]
        return (1 + jp[..., 0, 0]) * (1 + jp[..., 1, 1]) - jp[..., 0, 1] * jp[..., 1, 0]


def build_bundle(geom: Geometry, grid: TwoPhaseGrid, h: HeightField, dht: HeightField = None) -> TransformBundle:
    """Assemble all pullback corrections for the height field h and its rate."""
    if dht is None:
        dht = HeightField.zero(h.n_theta, h.R)
    return TransformBundle(geom, grid, h, dht)


# ---------------------------------------------------------------------------
# grid calculus in Cartesian components
# ---------------------------------------------------------------------------

def _grad_cart(grid: TwoPhaseGrid, phase, f):
    """Cartesian gradient of a scalar grid function (no pole node, so 1/r is safe)."""
    pg = grid.p1 if phase == 1 else grid.p2
    r = pg.r[:, None]
    c = np.cos(grid.theta)[None, :]
    s = np.sin(grid.theta)[None, :]
    fr = grid.dr(f, phase, 1, 4)
    ft = grid.dtheta(f)
    return c * fr - s / r * ft, s * fr + c / r * ft


def _vector_cart(grid, field: BulkField, phase):
    data = field.data1 if phase == 1 else field.data2
    ux, uy = polar_to_cart(data[0], data[1], grid.theta[None, :])
    return ux, uy


def _grad_matrix(grid, phase, ux, uy):
    gxx, gxy = _grad_cart(grid, phase, ux)
    gyx, gyy = _grad_cart(grid, phase, uy)
    G = np.empty(ux.shape + (2, 2))
    G[..., 0, 0], G[..., 0, 1] = gxx, gxy
    G[..., 1, 0], G[..., 1, 1] = gyx, gyy
    return G


def _hessian(grid, phase, f):
    fx, fy = _grad_cart(grid, phase, f)
    fxx, fxy = _grad_cart(grid, phase, fx)
    fyx, fyy = _grad_cart(grid, phase, fy)
    H = np.empty(f.shape + (2, 2))
    H[..., 0, 0] = fxx
    H[..., 1, 1] = fyy
    H[..., 0, 1] = H[..., 1, 0] = 0.5 * (fxy + fyx)
    return H


# ---------------------------------------------------------------------------
# bulk operators
# ---------------------------------------------------------------------------

def momentum_rhs(bundle: TransformBundle, u: BulkField, pi: BulkField, params, convection=False) -> BulkField:
    """Right-hand side of the pulled-back momentum equation (polar components).

    Includes the time-drift, Hessian, advective-drift and pressure-gradient
    corrections; the quadratic transport term -rho (u.grad)u on the moved
    domain is added only in Navier-Stokes mode (``convection=True``).
    """
    _check_same_grid(bundle, u)
    grid = bundle.grid
    out = []
    for phase in (1, 2):
        rho = params.rho(phase)
        mu = params.mu(phase)
        ux, uy = _vector_cart(grid, u, phase)
        G = _grad_matrix(grid, phase, ux, uy)
        Hx = _hessian(grid, phase, ux)
        Hy = _hessian(grid, phase, uy)
        K = bundle.K[phase]
        M4 = bundle.hess_defect[phase]
        c_vec = bundle.drift[phase]
        pdat = pi.data1 if phase == 1 else pi.data2
        px, py = _grad_cart(grid, phase, pdat[0])
        gradp = np.stack([px, py], axis=-1)

        GK = G @ K
        drift_t = np.einsum("...ij,...j->...i", GK, bundle.dt_shift[phase])
        hess = np.stack([np.einsum("...jl,...jl->...", M4, Hx), np.einsum("...jl,...jl->...", M4, Hy)], axis=-1)
        adv = np.einsum("...ij,...j->...i", G, c_vec)
        m1_gradp = np.einsum("...ij,...j->...i", bundle.grad_defect[phase], gradp)
        # moving -mu*lap(U)composed and grad(P)composed to the fixed-domain form
        # leaves -mu*hess + mu*adv + (I-K^T)grad(pi) on the right-hand side
        rhs = rho * drift_t + mu * (adv - hess) + m1_gradp
        if convection:
            uvec = np.stack([ux, uy], axis=-1)
            rhs = rhs - rho * np.einsum("...ij,...j->...i", GK, uvec)
        vr, vt = cart_to_polar(rhs[..., 0], rhs[..., 1], grid.theta[None, :])
        out.append(np.stack([vr, vt]))
    return BulkField(grid, out[0], out[1])


def divergence_defect(bundle: TransformBundle, u: BulkField) -> BulkField:
    """Defect tr(grad u (I - K)) so that div u = defect closes the system."""
    _check_same_grid(bundle, u)
    grid = bundle.grid
    out = []
    eye = np.eye(2)
    for phase in (1, 2):
        ux, uy = _vector_cart(grid, u, phase)
        G = _grad_matrix(grid, phase, ux, uy)
        out.append(np.einsum("...ij,...ji->...", G, eye - bundle.K[phase])[None])
    return BulkField(grid, out[0], out[1])


def _pad_theta(arr, n, m):
    """Band-limited upsample of a theta-sampled array (last axis length n -> m)."""
    c = np.fft.rfft(arr, axis=-1)
    return np.fft.irfft(c, m, axis=-1) * (m / n)


def stress_jump_rhs(bundle: TransformBundle, h: HeightField, u: BulkField, params):
    """Nonlinear remainders of the tangential/normal interface stress conditions.

    Returns (g_tau, g_nu) on the reference angles such that the linear-form
    conditions -[[2 mu E_rtheta]] = g_tau and
    -[[2 mu E_rr]] + [[pi]] - sigma*A h = g_nu + sigma*(H(h) - A h) reproduce
    the exact stress balance on the moved interface.  Products are formed on
    a 3/2 padded angular grid.  Both outputs vanish identically when u = 0
    or h = 0.
    """
    _check_same_grid(bundle, u)
    grid = bundle.grid
    n = grid.ntheta
    m = int(np.ceil(1.5 * n))
    m += m % 2
    alpha, beta, _ = normal_perturbed(h)

    def traces(phase):
        ux, uy = _vector_cart(grid, u, phase)
        G = _grad_matrix(grid, phase, ux, uy)
        idx = -1 if phase == 1 else 0
        Gt = G[idx]
        Kt = bundle.K[phase][idx]
        return _pad_theta(Gt.transpose(1, 2, 0), n, m), _pad_theta(Kt.transpose(1, 2, 0), n, m)

    G1, K1 = traces(1)
    G2, K2 = traces(2)
    alpha_p = _pad_theta(alpha, n, m)
    thp = np.arange(m) * 2 * np.pi / m
    nu = np.stack([np.cos(thp), np.sin(thp)])     # reference normal e_r
    tau = np.stack([-np.sin(thp), np.cos(thp)])   # reference tangent e_theta
    alpha_vec = alpha_p * tau

    def sym2mu(mu, M):
        return mu * (M + M.transpose(1, 0, 2))

    D1 = np.einsum("ikt,kjt->ijt", G1, K1)
    D2 = np.einsum("ikt,kjt->ijt", G2, K2)
    S_full = sym2mu(params.mu2, D2) - sym2mu(params.mu1, D1)
    S_plain = sym2mu(params.mu2, G2) - sym2mu(params.mu1, G1)

    def apply(M, v):
        return np.einsum("ijt,jt->it", M, v)

    def dot(a, b):
        return np.einsum("it,it->t", a, b)

    nma = nu - alpha_vec
    g_nu = dot(apply(S_full, nma), nu) - dot(apply(S_plain, nu), nu)
    full_nma_nu = dot(apply(S_full, nma), nu)
    g_tau = (
        dot(apply(S_full - S_plain, nu), tau)
        - dot(apply(S_full, alpha_vec), tau)
        + full_nma_nu * alpha_p
    )
    return truncate_values(g_tau, n), truncate_values(g_nu, n)


def kinematic_rhs(h: HeightField, u: BulkField):
    """Quadratic remainder of the interface evolution: dh/dt = u_r|_R + remainder.

    Equals minus the tangential slope times the tangential trace velocity,
    which makes the height equation reproduce the exact normal velocity of
    the moved curve.
    """
    grid = u.grid
    n = grid.ntheta
    m = int(np.ceil(1.5 * n))
    m += m % 2
    alpha, _, _ = normal_perturbed(h)
    ut = 0.5 * (u.trace_inner()[1] + u.trace_outer()[1])
    prod = _pad_theta(alpha, n, m) * _pad_theta(ut, n, m)
    return truncate_values(-prod, n)
