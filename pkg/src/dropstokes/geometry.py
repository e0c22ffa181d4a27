"""Reference geometry and the interface-fitting map.

The computational domain is a disk of radius ``R_Omega`` containing a
reference circle of radius ``R`` (the equilibrium interface).  Points within
distance ``a`` of the circle form a tubular neighbourhood on which the signed
distance and the closest-point projection are smooth; ``a`` must stay below
both the curvature radius of the circle and its clearance from the outer
wall.

A height field ``h`` over the circle deforms the plane through

    Theta_h(x) = x + chi(d(x)/a) * h(theta(x)) * e_r(theta(x)),

which moves the circle ``r = R`` onto the curve ``r = R + h(theta)`` and is
the identity outside the tube.  ``chi`` is a smooth plateau cut-off: exactly
1 on [0, 1/3], exactly 0 on [2/3, inf).  The map and its Jacobian are the
only places where the deformation enters; everything downstream works on the
fixed polar geometry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class InvalidHeightError(ValueError):
    """Height field too large for the tubular neighbourhood."""


class DomainError(ValueError):
    """Point outside the computational disk."""


@dataclass(frozen=True)
class AmbientPoint:
    """Polar coordinates of a point in the disk; theta normalized to [0, 2pi)."""

    r: float
    theta: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError(f"radius must be >= 0, got {self.r}")
        object.__setattr__(self, "theta", 0.0 if self.r == 0 else float(np.mod(self.theta, 2 * np.pi)))

    def xy(self):
        return self.r * np.cos(self.theta), self.r * np.sin(self.theta)


@dataclass(frozen=True)
class Geometry:
    """Reference disk of radius ``R_Omega`` with interface circle of radius ``R``.

    ``a`` is the tubular half-width (default half the clearance to the nearest
    obstruction), ``n_theta`` the angular grid size and ``n_r1``/``n_r2`` the
    radial grid sizes of the inner/outer phase.
    """

    R: float = 1.0
    R_Omega: float = 2.5
    a: float = None  # type: ignore[assignment]
    n_theta: int = 64
    n_r1: int = 64
    n_r2: int = 64

    def __post_init__(self):
        if not 0 < self.R < self.R_Omega:
            raise ValueError(f"need 0 < R < R_Omega, got R={self.R}, R_Omega={self.R_Omega}")
        if self.a is None:
            object.__setattr__(self, "a", 0.5 * min(self.R, self.R_Omega - self.R))
        if not 0 < self.a < min(self.R, self.R_Omega - self.R):
            raise ValueError(f"tubular half-width a={self.a} must lie in (0, {min(self.R, self.R_Omega - self.R)})")
        if self.n_theta % 2 != 0 or self.n_theta < 8:
            raise ValueError(f"n_theta must be even and >= 8, got {self.n_theta}")
        if self.n_r1 < 8 or self.n_r2 < 8:
            raise ValueError("radial grids need at least 8 points per phase")

    @property
    def height_bound(self):
        """Largest admissible sup-norm of a height field (strict)."""
        return self.a / 3.0

    def theta_grid(self):
        return np.arange(self.n_theta) * (2 * np.pi / self.n_theta)


def signed_distance(geom: Geometry, p: AmbientPoint):
    """Signed distance to the interface circle and the projected angle.

    Negative exactly in the dispersed phase (inside the circle).  Raises
    DomainError for points outside the disk.
    """
    if p.r > geom.R_Omega * (1 + 1e-12):
        raise DomainError(f"point at r={p.r} lies outside the disk of radius {geom.R_Omega}")
    return p.r - geom.R, p.theta


def cutoff_chi(s):
    """Smooth even plateau cut-off: 1 for |s| <= 1/3, 0 for |s| >= 2/3.

    Built from the standard exponential bump t -> exp(-1/t); the blend is
    symmetric about |s| = 1/2, so cutoff_chi(0.5) == 0.5 exactly.
    """
    s = np.abs(np.asarray(s, dtype=float))
    scalar = s.ndim == 0
    s = np.atleast_1d(s)
    out = np.zeros_like(s)
    out[s <= 1.0 / 3.0 + 1e-12] = 1.0
    mid = (s > 1.0 / 3.0 + 1e-12) & (s < 2.0 / 3.0 - 1e-12)
    if np.any(mid):
        t = 3.0 * s[mid] - 1.0  # in (0, 1)
        with np.errstate(divide="ignore"):
            f_t = np.exp(-1.0 / t)
            f_mt = np.exp(-1.0 / (1.0 - t))
        out[mid] = f_mt / (f_t + f_mt)
    return float(out[0]) if scalar else out


def cutoff_chi_prime(s):
    """Derivative of cutoff_chi (odd function, supported on 1/3 < |s| < 2/3)."""
    s_in = np.asarray(s, dtype=float)
    scalar = s_in.ndim == 0
    s_in = np.atleast_1d(s_in)
    sign = np.sign(s_in)
    s = np.abs(s_in)
    out = np.zeros_like(s)
    mid = (s > 1.0 / 3.0 + 1e-12) & (s < 2.0 / 3.0 - 1e-12)
    if np.any(mid):
        t = 3.0 * s[mid] - 1.0
        with np.errstate(divide="ignore"):
            f_t = np.exp(-1.0 / t)
            f_mt = np.exp(-1.0 / (1.0 - t))
        df_t = f_t / t**2
        df_mt = f_mt / (1.0 - t) ** 2
        # d/dt of f(1-t)/(f(t)+f(1-t))
        g = (-df_mt * (f_t + f_mt) - f_mt * (df_t - df_mt)) / (f_t + f_mt) ** 2
        out[mid] = 3.0 * g[...]
    out = out * sign
    return float(out[0]) if scalar else out


def cutoff_chi_second(s):
    """Second derivative of cutoff_chi (even, supported on 1/3 < |s| < 2/3)."""
    s = np.abs(np.asarray(s, dtype=float))
    scalar = s.ndim == 0
    s = np.atleast_1d(s)
    out = np.zeros_like(s)
    mid = (s > 1.0 / 3.0 + 1e-12) & (s < 2.0 / 3.0 - 1e-12)
    if np.any(mid):
        t = 3.0 * s[mid] - 1.0
        phi = 1.0 / (1.0 - t) - 1.0 / t
        dphi = 1.0 / (1.0 - t) ** 2 + 1.0 / t**2
        d2phi = 2.0 / (1.0 - t) ** 3 - 2.0 / t**3
        with np.errstate(over="ignore"):
            g = 1.0 / (1.0 + np.exp(phi))
        g1mg = g * (1.0 - g)
        out[mid] = 9.0 * (-d2phi * g1mg + dphi**2 * g1mg * (1.0 - 2.0 * g))
    return float(out[0]) if scalar else out


def _check_height(geom: Geometry, h):
    hmax = h.max_abs()
    if hmax >= geom.height_bound:
        raise InvalidHeightError(
            f"height amplitude {hmax:.3g} exceeds the admissible bound a/3 = {geom.height_bound:.3g}"
        )


def hanzawa_map(geom: Geometry, h, p: AmbientPoint) -> AmbientPoint:
    """Push a point along the interface deformation induced by ``h``.

    Points with |r - R| > 2a/3 are fixed; the circle r = R is carried onto
    the curve r = R + h(theta).
    """
    _check_height(geom, h)
    chi = cutoff_chi((p.r - geom.R) / geom.a)
    return AmbientPoint(p.r + chi * float(h.eval(p.theta)), p.theta)


def hanzawa_jacobian(geom: Geometry, h, p: AmbientPoint):
    """Jacobian (Cartesian frame) of the perturbation part of the map.

    Returns the 2x2 matrix J_pert with d(Theta_h)/dx = I + J_pert.  Vanishes
    identically for |r - R| > 2a/3.
    """
    _check_height(geom, h)
    return _jacobian_terms(geom, p.r, p.theta, float(h.eval(p.theta)), float(h.eval_deriv(p.theta)))


def _jacobian_terms(geom: Geometry, r, theta, h_val, dh_val):
    """Assemble A*er@er + B*er@eth + C*eth@eth with the plateau factors.

    A = chi' h / a (radial stretch), B = chi h' / r (shear from the angular
    slope), C = chi h / r (azimuthal stretch).  Shapes broadcast; r may be 0
    only where chi vanishes.
    """
    s = (r - geom.R) / geom.a
    chi = cutoff_chi(s)
    chi_p = cutoff_chi_prime(s)
    active = (chi != 0.0) | (chi_p != 0.0)
    r_safe = np.where(np.asarray(r) == 0.0, 1.0, r)
    A = chi_p * h_val / geom.a
    B = np.where(active, chi * dh_val / r_safe, 0.0)
    C = np.where(active, chi * h_val / r_safe, 0.0)
    c, s_ = np.cos(theta), np.sin(theta)
    j00 = A * c * c + B * (-c * s_) + C * s_ * s_
    j01 = A * c * s_ + B * (c * c) + C * (-c * s_)
    j10 = A * c * s_ + B * (-s_ * s_) + C * (-c * s_)
    j11 = A * s_ * s_ + B * (c * s_) + C * c * c
    return np.stack([np.stack([j00, j01], axis=-1), np.stack([j10, j11], axis=-1)], axis=-2)


def jacobian_grid(geom: Geometry, h, r, theta):
    """Perturbation Jacobian on a tensor grid, shape (nr, ntheta, 2, 2)."""
    _check_height(geom, h)
    hv = h.values(geom.n_theta)
    dhv = h.deriv_values(geom.n_theta)
    rr = np.asarray(r)[:, None]
    tt = np.asarray(theta)[None, :]
    return _jacobian_terms(geom, rr, tt, hv[None, :], dhv[None, :])
