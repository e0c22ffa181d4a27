import numpy as np
import pytest
from numpy.testing import assert_allclose

from dropstokes.surface import (
    HeightField,
    SingularResolventError,
    curvature_full,
    curvature_linearized,
    g_gamma,
    normal_perturbed,
    surface_gradient,
    weingarten_resolvent,
)

from oracles import polar_curvature


def grid(n):
    return np.arange(n) * 2 * np.pi / n


def test_surface_gradient():
    n = 64
    th = grid(n)
    assert_allclose(surface_gradient(HeightField.from_harmonics(n, 1.0, [(0, 3.0, 0)])), 0.0, atol=1e-14)
    h = HeightField.from_harmonics(n, 1.0, [(1, 1.0, 0.0)])
    assert_allclose(surface_gradient(h), -np.sin(th), atol=1e-13)
    h = HeightField.from_harmonics(n, 2.0, [(1, 0.0, 1.0)])
    assert_allclose(surface_gradient(h), 0.5 * np.cos(th), atol=1e-13)


def test_weingarten_resolvent():
    n = 64
    h0 = HeightField.zero(n, 1.0)
    assert_allclose(weingarten_resolvent(h0), 1.0)
    h1 = HeightField.from_harmonics(n, 1.0, [(0, 1.0, 0.0)])
    assert_allclose(weingarten_resolvent(h1), 0.5)
    hm = HeightField.from_harmonics(n, 1.0, [(1, -0.5, 0.0)])
    assert_allclose(weingarten_resolvent(hm)[0], 2.0, atol=1e-12)  # theta=0 where h=-0.5
    assert_allclose(weingarten_resolvent(h0, d=0.5), 1.0 / 1.5)
    with pytest.raises(SingularResolventError):
        weingarten_resolvent(HeightField.from_harmonics(n, 1.0, [(0, -1.0, 0.0)]))


def test_normal_perturbed():
    n = 128
    th = grid(n)
    h0 = HeightField.zero(n, 1.0)
    a, b, nu = normal_perturbed(h0)
    assert_allclose(a, 0.0, atol=1e-14)
    assert_allclose(b, 1.0, atol=1e-14)
    assert_allclose(nu[0], 1.0, atol=1e-14)

    h = HeightField.from_harmonics(n, 1.0, [(2, 0.1, 0.0)])
    a, b, nu = normal_perturbed(h)
    assert np.max(np.abs(nu[0] ** 2 + nu[1] ** 2 - 1.0)) < 1e-12
    hv, dv = h.values(), h.deriv_values()
    norm = np.sqrt((1 + hv) ** 2 + dv**2)
    assert np.max(np.abs(nu[0] - (1 + hv) / norm)) < 1e-10
    assert np.max(np.abs(nu[1] - (-dv) / norm)) < 1e-10


def test_curvature_full():
    n = 128
    h0 = HeightField.zero(n, 1.0)
    assert_allclose(curvature_full(h0), -1.0, atol=1e-14)
    hc = HeightField.from_harmonics(n, 1.5, [(0, 0.25, 0.0)])
    assert_allclose(curvature_full(hc), -1.0 / 1.75, atol=1e-13)
    h = HeightField.from_harmonics(n, 1.0, [(2, 0.1, 0.0)])
    d2v = np.fft.irfft(h.deriv_coeffs() * 1j * np.arange(n // 2 + 1), n)
    oracle = polar_curvature(1.0, h.values(), h.deriv_values(), d2v)
    assert np.max(np.abs(curvature_full(h) - oracle)) < 1e-8


def test_curvature_linearized():
    n = 64
    th = grid(n)
    assert_allclose(curvature_linearized(HeightField.from_harmonics(n, 1.0, [(0, 1.0, 0)])), 1.0, atol=1e-14)
    assert_allclose(curvature_linearized(HeightField.from_harmonics(n, 1.0, [(1, 1.0, 0)])), 0.0, atol=1e-14)
    h3 = HeightField.from_harmonics(n, 1.0, [(3, 1.0, 0.0)])
    assert_allclose(curvature_linearized(h3), -8.0 * np.cos(3 * th), atol=1e-12)


def test_linearization_is_derivative_of_curvature():
    n = 128
    h = HeightField.from_harmonics(n, 1.0, [(2, 1.0, 0.0), (3, 0.0, 0.5)])
    lin = curvature_linearized(h)
    errs = []
    for eps in (2e-3, 1e-3, 5e-4):
        dq = (curvature_full(h * eps) - curvature_full(h * (-eps))) / (2 * eps)
        errs.append(np.max(np.abs(dq - lin)))
    slope = np.polyfit(np.log([2e-3, 1e-3, 5e-4]), np.log(errs), 1)[0]
    assert slope >= 1.9


def test_g_gamma():
    n = 128
    h0 = HeightField.zero(n, 1.0)
    assert_allclose(g_gamma(h0, 2.0), -2.0, atol=1e-13)
    hc = HeightField.from_harmonics(n, 1.0, [(0, 0.1, 0.0)])
    assert_allclose(g_gamma(hc, 1.0), -1.0 / 1.1 - 0.1, atol=1e-12)
    # first derivative at zero vanishes: g(eps h) - g(0) = O(eps^2)
    h = HeightField.from_harmonics(n, 1.0, [(2, 1.0, 0.0)])
    base = g_gamma(h0, 1.0)
    devs = [np.max(np.abs(g_gamma(h * eps, 1.0) - base)) for eps in (2e-2, 1e-2, 5e-3)]
    slope = np.polyfit(np.log([2e-2, 1e-2, 5e-3]), np.log(devs), 1)[0]
    assert slope >= 1.9


def test_rotation_equivariance():
    n = 64
    h = HeightField.from_harmonics(n, 1.0, [(2, 0.08, 0.0), (3, 0.0, 0.04)])
    shift = 5
    th0 = shift * 2 * np.pi / n
    hr = h.rotate(th0)
    for op in (curvature_full, curvature_linearized, surface_gradient):
        assert_allclose(op(hr), np.roll(op(h), shift), atol=1e-12)
    a, _, _ = normal_perturbed(h)
    ar, _, _ = normal_perturbed(hr)
    assert_allclose(ar, np.roll(a, shift), atol=1e-12)


def test_spectral_exactness_on_resolved_modes():
    # linear operators act diagonally: exact on any resolved mode
    n = 64
    for k in (1, 5, 20, 31):
        h = HeightField.from_harmonics(n, 1.0, [(k, 1.0, 0.0)])
        th = grid(n)
        assert_allclose(surface_gradient(h), -k * np.sin(k * th), atol=1e-11)
        assert_allclose(curvature_linearized(h), (1 - k**2) * np.cos(k * th), atol=1e-9)


def test_height_field_roundtrip_and_invariants():
    n = 32
    rng = np.random.default_rng(0)
    vals = rng.normal(size=n)
    h = HeightField.from_values(vals, 1.0)
    assert_allclose(h.values(), vals, atol=1e-13)
    assert h.coeffs[0].imag == 0.0
    assert h.coeffs[-1].imag == 0.0
    with pytest.raises(ValueError):
        HeightField.from_harmonics(n, 1.0, [(n, 1.0, 0.0)])
