"""Ball fitting, tangent-ball monitoring and convergence-rate estimation.

The rest states of the flow are circles with arbitrary center and radius
(zero velocity, constant pressure per phase), a three-parameter family.
This module measures how far a given interface is from that family:
:func:`fit_ball` fits center and radius through exact area integrals,
:func:`ball_condition` monitors the largest radius of tangent disks fitting
inside both phases (a proxy for curvature bounds, wall clearance and
topology protection), and :func:`exponential_rate` extracts decay rates
from trailing diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Geometry, InvalidHeightError
from .surface import HeightField, curvature_full


@dataclass(frozen=True)
class BallFit:
    center: tuple
    radius: float
    residual: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("fitted radius must be positive")


def _curve_points(h: HeightField, m):
    th = np.arange(m) * 2 * np.pi / m
    r = h.R + h.values(m)
    return th, r


def fit_ball(h: HeightField, geom: Geometry) -> BallFit:
    """Fit the disk with the same area and centroid as the enclosed region.

    The radius comes from the enclosed area (so it matches area
    conservation exactly) and the center from the area centroid; one
    re-centering pass removes the first-order parametrization bias.  The
    residual is the rms distance between the curve and the fitted circle.
    """
    if h.max_abs() >= geom.a:
        raise InvalidHeightError("curve leaves the tubular neighbourhood")
    m = 4 * h.n_theta
    th, r = _curve_points(h, m)
    area = 0.5 * np.mean(r**2) * 2 * np.pi
    cx = (2 * np.pi) * np.mean(r**3 * np.cos(th)) / (3 * area)
    cy = (2 * np.pi) * np.mean(r**3 * np.sin(th)) / (3 * area)
    radius = np.sqrt(area / np.pi)

    # one re-fit about the new center: exact area again, centroid update
    x = r * np.cos(th) - cx
    y = r * np.sin(th) - cy
    rho = np.hypot(x, y)
    phi = np.arctan2(y, x)
    # shoelace-type integrals in the shifted frame: area and centroid via
    # the curve (rho(t), phi(t)) with t the original parameter
    dphi = _dtheta_periodic(phi, th)
    area2 = 0.5 * np.mean(rho**2 * dphi) * 2 * np.pi
    cx2 = (2 * np.pi) * np.mean(rho**3 * np.cos(phi) * dphi) / (3 * area2)
    cy2 = (2 * np.pi) * np.mean(rho**3 * np.sin(phi) * dphi) / (3 * area2)
    center = (cx + cx2, cy + cy2)
    x = r * np.cos(th) - center[0]
    y = r * np.sin(th) - center[1]
    dist = np.hypot(x, y) - radius
    return BallFit(center, float(radius), float(np.sqrt(np.mean(dist**2))))


def _dtheta_periodic(phi, th):
    """d(phi)/d(theta) for the unwrapped angle along the curve."""
    phi_un = np.unwrap(phi)
    c = np.fft.rfft(phi_un - th)
    k = np.arange(c.shape[0])
    c *= 1j * k
    c[-1] = 0.0
    return 1.0 + np.fft.irfft(c, th.shape[0])


def ball_condition(h: HeightField, geom: Geometry) -> float:
    """Largest radius of disks tangent to the interface inside both phases.

    Minimum of the curvature bound 1/max|H|, the wall clearance and the
    discrete interior/exterior tangent-disk search over point pairs; the
    exterior disks are additionally confined to the computational disk.
    """
    if h.max_abs() >= geom.a:
        raise InvalidHeightError("curve leaves the tubular neighbourhood")
    H = curvature_full(h)
    r_curv = 1.0 / np.max(np.abs(H))
    m = 2 * h.n_theta
    th, r = _curve_points(h, m)
    P = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
    wall = np.min(geom.R_Omega - r)

    hv = h.values(m)
    dv = h.deriv_values(m)
    norm = np.sqrt((h.R + hv) ** 2 + dv**2)
    nu = np.stack([((h.R + hv) * np.cos(th) - dv * (-np.sin(th))) / norm,
                   ((h.R + hv) * np.sin(th) - dv * np.cos(th)) / norm], axis=-1)

    diff = P[None, :, :] - P[:, None, :]          # diff[i, j] = P_j - P_i
    dist2 = np.einsum("ijk,ijk->ij", diff, diff)
    proj = np.einsum("ijk,ik->ij", diff, nu)      # (P_j - P_i | nu_i)
    with np.errstate(divide="ignore", invalid="ignore"):
        bound_int = np.where(proj < 0, dist2 / (-2 * proj), np.inf)
        bound_ext = np.where(proj > 0, dist2 / (2 * proj), np.inf)
    np.fill_diagonal(bound_int, np.inf)
    np.fill_diagonal(bound_ext, np.inf)
    r_int = np.min(bound_int)
    r_ext_pairs = np.min(bound_ext)
    # exterior tangent disks must stay inside the wall: |P + rho nu| + rho <= R_Omega
    pn = np.einsum("ik,ik->i", P, nu)
    rho_wall = (geom.R_Omega**2 - np.einsum("ik,ik->i", P, P)) / (2 * (geom.R_Omega + pn))
    r_ext = min(r_ext_pairs, float(np.min(rho_wall)))
    return float(min(r_curv, wall, r_int, r_ext))


def young_laplace_residual(state, params, geom: Geometry) -> float:
    """Sup-norm defect of the normal stress balance on the moved interface.

    Evaluates [[pi]] - viscous normal jump - sigma * full curvature with
    the pulled-back velocity gradient; the pressure is taken from the
    state (reconstruct it first if absent).
    """
    from .evolution import _transformed_normal_jump
    from .fields import make_grid
    from .surface import normal_perturbed
    from .transform import build_bundle
    from .transmission import interface_jump

    grid = make_grid(geom)
    h = state.h
    bundle = build_bundle(geom, grid, h)
    _, _, nu = normal_perturbed(h)
    visc = _transformed_normal_jump(grid, params, bundle, state.u, nu)
    pj = interface_jump(state.pi)
    return float(np.max(np.abs(pj - visc - params.sigma * curvature_full(h))))


def exponential_rate(times, values):
    """Decay rate fitted to log(values) over the trailing half of the series.

    Returns (rate, r_squared); positive rate means decay.  Requires at
    least eight strictly positive samples.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape or t.size < 8:
        raise ValueError("need at least 8 samples")
    if np.any(y <= 0):
        raise ValueError("samples must be strictly positive")
    half = t.size // 2
    t, y = t[half:], np.log(y[half:])
    A = np.stack([t, np.ones_like(t)], axis=-1)
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    fit = A @ coef
    ss_res = np.sum((y - fit) ** 2)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return -coef[0], float(r2)
