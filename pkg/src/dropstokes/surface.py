"""Spectral calculus on the reference circle.

Scalar fields on the circle are represented by their real-FFT coefficients;
all linear operators (angular derivative, Laplace-Beltrami, curvature
linearization) act diagonally on modes and are exact on resolved modes.
Nonlinear expressions (perturbed normal, full curvature) are evaluated
pointwise on a 3/2 zero-padded grid and truncated back, the usual guard
against aliasing of quadratic-and-higher products.

Sign conventions.  The outward normal of the circle points from the
dispersed into the continuous phase, the shape operator of the circle is
-1/R on tangent vectors, and the curvature of the unperturbed circle is
-1/R: curvature is negative where the dispersed phase is convex.
"""

from __future__ import annotations

import numpy as np


class SingularResolventError(ValueError):
    """Height reaches -R somewhere; the shape-operator resolvent blows up."""


def pad_values(coeffs, n, factor=1.5):
    """Evaluate an rfft-coefficient vector on a grid of ceil(factor*n) points."""
    m = int(np.ceil(factor * n))
    if m % 2:
        m += 1
    return np.fft.irfft(coeffs, m) * (m / n), m


def truncate_values(vals_padded, n):
    """Project values on a padded grid back to the n-point spectrum."""
    m = vals_padded.shape[-1]
    c = np.fft.rfft(vals_padded, axis=-1)[..., : n // 2 + 1] * (n / m)
    if c.shape[-1] == n // 2 + 1:
        c[..., -1] = c[..., -1].real
    return np.fft.irfft(c, n, axis=-1)


class HeightField:
    """Real function on the reference circle, stored as rfft coefficients.

    ``coeffs[k]`` is the numpy rfft coefficient of mode k for an ``n_theta``
    point grid, so ``values()`` and ``np.fft.rfft`` round-trip exactly.  The
    top mode is kept real (the usual convention for an even-length real
    spectrum), and Hermitian symmetry is implied by the storage.
    """

    def __init__(self, coeffs, radius, n_theta=None):
        coeffs = np.asarray(coeffs, dtype=complex).copy()
        if n_theta is None:
            n_theta = 2 * (coeffs.shape[0] - 1)
        if coeffs.shape[0] != n_theta // 2 + 1:
            raise ValueError(f"need n_theta//2 + 1 = {n_theta // 2 + 1} coefficients, got {coeffs.shape[0]}")
        if radius <= 0:
            raise ValueError("radius must be positive")
        coeffs[0] = coeffs[0].real
        coeffs[-1] = coeffs[-1].real
        self.coeffs = coeffs
        self.R = float(radius)
        self.n_theta = int(n_theta)

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, n_theta, radius):
        return cls(np.zeros(n_theta // 2 + 1, dtype=complex), radius, n_theta)

    @classmethod
    def from_values(cls, vals, radius):
        vals = np.asarray(vals, dtype=float)
        return cls(np.fft.rfft(vals), radius, vals.shape[0])

    @classmethod
    def from_harmonics(cls, n_theta, radius, terms):
        """Build from (k, cos_amp, sin_amp) triples: sum of a*cos(k th) + b*sin(k th)."""
        c = np.zeros(n_theta // 2 + 1, dtype=complex)
        for k, ca, sa in terms:
            k = int(k)
            if k > n_theta // 2:
                raise ValueError(f"mode {k} not representable on {n_theta} points")
            if k == 0:
                c[0] += ca * n_theta
            elif k == n_theta // 2:
                c[k] += ca * n_theta / 2.0  # sin part of the top mode is not representable
            else:
                c[k] += (ca - 1j * sa) * (n_theta / 2.0)
        return cls(c, radius, n_theta)

    # -- evaluation -------------------------------------------------------
    def values(self, n=None):
        n = n or self.n_theta
        if n == self.n_theta:
            return np.fft.irfft(self.coeffs, self.n_theta)
        v, _ = pad_values(self.coeffs, self.n_theta, n / self.n_theta)
        return v

    def deriv_coeffs(self):
        k = np.arange(self.coeffs.shape[0])
        c = self.coeffs * (1j * k)
        c[-1] = 0.0  # derivative of the unresolved sine partner of the top mode
        return c

    def deriv_values(self, n=None):
        n = n or self.n_theta
        return np.fft.irfft(self.deriv_coeffs() * (n / self.n_theta), n)

    def eval(self, theta):
        return _eval_series(self.coeffs, self.n_theta, theta)

    def eval_deriv(self, theta):
        return _eval_series(self.deriv_coeffs(), self.n_theta, theta)

    def max_abs(self):
        """Sup-norm estimated on a 4x refined grid."""
        return float(np.max(np.abs(self.values(4 * self.n_theta))))

    def l2norm(self):
        """Norm sqrt(mean(h^2)) over the circle parameter."""
        return float(np.sqrt(np.mean(self.values() ** 2)))

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        self._compat(other)
        return HeightField(self.coeffs + other.coeffs, self.R, self.n_theta)

    def __sub__(self, other):
        self._compat(other)
        return HeightField(self.coeffs - other.coeffs, self.R, self.n_theta)

    def __mul__(self, scalar):
        return HeightField(self.coeffs * float(scalar), self.R, self.n_theta)

    __rmul__ = __mul__

    def shift(self, const):
        c = self.coeffs.copy()
        c[0] += const * self.n_theta
        return HeightField(c, self.R, self.n_theta)

    def rotate(self, theta0):
        k = np.arange(self.coeffs.shape[0])
        return HeightField(self.coeffs * np.exp(-1j * k * theta0), self.R, self.n_theta)

    def _compat(self, other):
        if self.n_theta != other.n_theta or self.R != other.R:
            raise ValueError("height fields live on different reference circles")


def _eval_series(coeffs, n, theta):
    theta = np.asarray(theta, dtype=float)
    k = np.arange(coeffs.shape[0])
    phase = np.exp(1j * np.multiply.outer(theta, k))
    w = np.ones_like(k, dtype=float) * 2.0
    w[0] = 1.0
    w[-1] = 1.0
    out = (phase * (w * coeffs)).real.sum(axis=-1) / n
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# linear operators (diagonal in Fourier space)
# ---------------------------------------------------------------------------

def surface_gradient(h: HeightField):
    """Tangential component of the surface gradient, (1/R) dh/dtheta, on the grid."""
    return h.deriv_values() / h.R


def curvature_linearized(h: HeightField):
    """First variation of curvature at the circle: mode k is scaled by (1-k^2)/R^2."""
    k = np.arange(h.coeffs.shape[0])
    return np.fft.irfft(h.coeffs * (1.0 - k**2) / h.R**2, h.n_theta)


def laplace_beltrami(h: HeightField):
    """Angular Laplacian on the circle: mode k scaled by -k^2/R^2."""
    k = np.arange(h.coeffs.shape[0])
    return np.fft.irfft(h.coeffs * (-(k**2)) / h.R**2, h.n_theta)


# ---------------------------------------------------------------------------
# nonlinear surface expressions (pseudospectral, 3/2-padded)
# ---------------------------------------------------------------------------

def _padded_state(h: HeightField):
    hv, m = pad_values(h.coeffs, h.n_theta)
    dv = np.fft.irfft(h.deriv_coeffs() * (m / h.n_theta), m)
    if np.min(1.0 + hv / h.R) <= 0.0:
        raise SingularResolventError("height touches -R; shape-operator resolvent is singular")
    return hv, dv, m


def weingarten_resolvent(h: HeightField, d=None):
    """Scalar multiplier (1 + h/R)^(-1) of the inverted shape-operator factor.

    With the shape operator -1/R on the circle, (I - h L)^(-1) acts on
    tangent vectors as multiplication by 1/(1 + h/R).  The optional signed
    distance ``d`` gives the constant-offset variant (1 + d/R)^(-1) used off
    the interface.
    """
    if d is not None:
        d = np.asarray(d, dtype=float)
        if np.any(1.0 + d / h.R <= 0.0):
            raise SingularResolventError("offset reaches the curvature center")
        return 1.0 / (1.0 + d / h.R)
    hv = h.values()
    if np.min(1.0 + hv / h.R) <= 0.0:
        raise SingularResolventError("height touches -R; shape-operator resolvent is singular")
    return 1.0 / (1.0 + hv / h.R)


def normal_perturbed(h: HeightField):
    """Tangential slope alpha, normalizer beta, and the unit normal of the moved curve.

    Returns (alpha, beta, nu) on the n_theta grid; nu has shape (2, n_theta)
    holding the e_r and e_theta components of the normal at the material
    point above each reference angle.  beta * (e_r - alpha e_theta) is unit
    length by construction.
    """
    hv, dv, m = _padded_state(h)
    m0 = 1.0 / (1.0 + hv / h.R)
    alpha = m0 * dv / h.R
    beta = 1.0 / np.sqrt(1.0 + alpha**2)
    n = h.n_theta
    alpha_g = truncate_values(alpha, n)
    beta_g = truncate_values(beta, n)
    nu = np.stack([truncate_values(beta, n), truncate_values(-beta * alpha, n)])
    return alpha_g, beta_g, nu


def curvature_full(h: HeightField):
    """Signed curvature of the curve r = R + h(theta), sampled at reference angles.

    Evaluates beta * m0 * (alpha' - 1)/R - beta^3 * m0 * alpha^2 * alpha'/R
    with alpha = m0 h'/R, the trace form of the perturbed-circle curvature;
    equals -1/(R + c) for constant h = c and reduces to -1/R at h = 0.
    """
    hv, dv, m = _padded_state(h)
    m0 = 1.0 / (1.0 + hv / h.R)
    alpha = m0 * dv / h.R
    beta2 = 1.0 / (1.0 + alpha**2)
    beta = np.sqrt(beta2)
    dalpha = _spectral_deriv(alpha)
    H = beta * (m0 * (dalpha - 1.0) / h.R) - beta * beta2 * m0 * alpha**2 * dalpha / h.R
    return truncate_values(H, h.n_theta)


def g_gamma(h: HeightField, sigma):
    """Curvature nonlinearity sigma*(full curvature - linearized curvature).

    Carries the constant -sigma/R at h = 0 and is quadratically small in h
    beyond that.
    """
    return sigma * (curvature_full(h) - curvature_linearized(h))


def _spectral_deriv(vals):
    c = np.fft.rfft(vals)
    k = np.arange(c.shape[0])
    c *= 1j * k
    c[-1] = 0.0
    return np.fft.irfft(c, vals.shape[-1])
