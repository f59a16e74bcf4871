import math
import warnings

import numpy as np
import pytest
import scipy.special as sps

from isospec import harmonics as h
from isospec import wigner


def random_coeffs(lmax, seed=0):
    rng = np.random.default_rng(seed)
    z = np.tril(rng.standard_normal((lmax + 1, lmax + 1)) + 1j * rng.standard_normal((lmax + 1, lmax + 1)))
    z[:, 0] = z[:, 0].real
    return h.HarmonicCoeffs(lmax, z)


def _scipy_ylm(l, m, theta, phi):
    if hasattr(sps, "sph_harm_y"):
        return sps.sph_harm_y(l, m, theta, phi)
    return sps.sph_harm(m, l, phi, theta)


def _golub_welsch(n):
    k = np.arange(1, n)
    off = k / np.sqrt(4.0 * k * k - 1)
    vals, vecs = np.linalg.eigh(np.diag(off, 1) + np.diag(off, -1))
    return vals, 2.0 * vecs[0] ** 2


def test_gauss_legendre_against_golub_welsch():
    for n in (1, 2, 7, 33, 80):
        x, w = h.gauss_legendre(n)
        xo, wo = _golub_welsch(n)
        assert np.abs(np.sort(x) - xo).max() < 1e-13
        assert np.abs(w[np.argsort(x)] - wo).max() < 1e-13


def test_legendre_against_numpy_series():
    x = np.linspace(-1, 1, 41)
    P = h.legendre_all(12, x)
    for l in range(13):
        ref = np.polynomial.legendre.legval(x, [0] * l + [1])
        assert np.abs(P[l] - ref).max() < 1e-13
        assert np.abs(h.legendre(l, x) - ref).max() < 1e-13


def test_spherical_harmonic_against_scipy():
    rng = np.random.default_rng(1)
    th = np.arccos(rng.uniform(-1, 1, 20))
    ph = rng.uniform(0, 2 * np.pi, 20)
    for l in range(0, 16, 3):
        for m in range(-l, l + 1):
            got = h.spherical_harmonic(l, m, th, ph)
            assert np.abs(got - _scipy_ylm(l, m, th, ph)).max() < 1e-12


def test_assoc_table_shape_and_values():
    th = np.array([0.2, 1.0, 2.7])
    T = h.assoc_legendre_table(5, th)
    assert T.shape == (6, 6, 3)
    for l in range(6):
        for m in range(l + 1):
            assert np.allclose(T[l, m], h.spherical_harmonic(l, m, th, 0.0).real, atol=1e-14)


@pytest.mark.parametrize("lmax", [0, 1, 8, 32])
def test_sht_round_trip(lmax):
    c = random_coeffs(lmax, seed=lmax)
    g = h.SphereGrid.gauss(lmax)
    assert g.shape == (lmax + 1, 2 * lmax + 2)
    back = h.analyze(h.synthesize(c, g), lmax)
    assert np.abs(back.z - c.z).max() < 1e-9


def test_fast_and_direct_paths_agree():
    c = random_coeffs(20, seed=9)
    g = h.SphereGrid.gauss(20)
    a = h.synthesize(c, g)
    b = h.synthesize(c, g, fast=True)
    assert np.abs(a.values - b.values).max() < 1e-11
    assert np.abs(h.analyze(a, 20, fast=True).z - h.analyze(a, 20).z).max() < 1e-11


def test_synthesize_points_matches_grid_and_degree_mask():
    c = random_coeffs(6, seed=2)
    g = h.SphereGrid.gauss(6)
    m = h.synthesize(c, g, degrees=[2, 3])
    TH, PH = np.meshgrid(g.colatitudes, g.longitudes, indexing="ij")
    pts = h.synthesize_points(c, TH.ravel(), PH.ravel(), degrees=[2, 3]).reshape(TH.shape)
    assert np.abs(m.values - pts).max() < 1e-12
    # direct sum of the full complex expansion
    ref = sum(
        c.block(l)[mm + l] * h.spherical_harmonic(l, mm, TH, PH) for l in (2, 3) for mm in range(-l, l + 1)
    )
    assert np.abs(ref.imag).max() < 1e-12
    assert np.abs(ref.real - pts).max() < 1e-12


def test_rotation_commutes_with_synthesis():
    c = random_coeffs(16, seed=3)
    g = wigner.sample_haar_rotation(np.random.default_rng(3))
    rng = np.random.default_rng(4)
    th = np.arccos(rng.uniform(-1, 1, 30))
    ph = rng.uniform(0, 2 * np.pi, 30)
    x = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
    y = g.matrix().T @ x  # g^{-1} x
    lhs = h.synthesize_points(wigner.rotate_coefficients(c, g), th, ph)
    rhs = h.synthesize_points(c, np.arccos(np.clip(y[2], -1, 1)), np.arctan2(y[1], y[0]))
    assert np.abs(lhs - rhs).max() < 1e-11


def test_rotation_preserves_power():
    c = random_coeffs(12, seed=5)
    g = wigner.sample_haar_rotation(np.random.default_rng(6))
    assert np.abs(wigner.rotate_coefficients(c, g).power() - c.power()).max() < 1e-12


def test_addition_theorem():
    rng = np.random.default_rng(7)
    for _ in range(10):
        t1, t2 = np.arccos(rng.uniform(-1, 1, 2))
        p1, p2 = rng.uniform(0, 2 * np.pi, 2)
        cg = np.cos(t1) * np.cos(t2) + np.sin(t1) * np.sin(t2) * np.cos(p1 - p2)
        for l in range(12):
            s = sum(
                np.conj(h.spherical_harmonic(l, m, t1, p1)) * h.spherical_harmonic(l, m, t2, p2)
                for m in range(-l, l + 1)
            )
            assert abs(s - (2 * l + 1) / (4 * np.pi) * h.legendre(l, cg)) < 1e-11


def test_map_integration():
    g = h.SphereGrid.gauss(10)
    TH, PH = np.meshgrid(g.colatitudes, g.longitudes, indexing="ij")
    m = h.SphereMap(g, np.cos(TH) ** 2)
    assert m.integrate() == pytest.approx(4 * np.pi / 3, rel=1e-13)


def test_block_layout_and_reality():
    c = random_coeffs(4, seed=8)
    b = c.block(3)
    for m in range(1, 4):
        assert b[3 - m] == pytest.approx((-1) ** m * np.conj(b[3 + m]))
    again = h.HarmonicCoeffs.from_blocks([c.block(l) for l in range(5)])
    assert np.array_equal(again.z, c.z)
    bad = [c.block(l).copy() for l in range(5)]
    bad[2][0] += 1.0
    with pytest.raises(ValueError):
        h.HarmonicCoeffs.from_blocks(bad)


def test_legendre_transform_round_trip_through_covariance():
    l = np.arange(17)
    f = 1.0 / (l * (l + 1) + 1.0) ** 2
    C = lambda x: h.covariance_eval(f, x)
    back = h.legendre_transform(C, 16, nquad=40)
    assert np.abs(back.f - f).max() < 1e-14
    ang = h.legendre_transform(lambda gam: h.covariance_eval(f, np.cos(gam)), 16, nquad=60, variable="angle")
    assert np.abs(ang.f - f).max() < 1e-13


def test_covariance_eval_against_direct_sum():
    f = np.array([1.0, 0.5, 0.25, 0.125, 0.3])
    x = np.linspace(-1, 1, 9)
    ref = sum(f[l] * (2 * l + 1) / (4 * np.pi) * np.polynomial.legendre.legval(x, [0] * l + [1]) for l in range(5))
    assert np.abs(h.covariance_eval(f, x) - ref).max() < 1e-15


def test_clamping_policy():
    assert h.check_spectrum(np.array([1.0, -1e-13])).f[1] == 0.0
    with pytest.warns(RuntimeWarning):
        out = h.check_spectrum(np.array([1.0, -1e-10]))
    assert out.f[1] == 0.0
    with pytest.raises(h.NotPositiveDefiniteError) as ei:
        h.check_spectrum(np.array([1.0, 0.2, -1e-3]))
    assert ei.value.degrees == [2]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        h.check_spectrum(np.array([0.0, 1.0]))


def test_spectrum_and_coeff_validation():
    with pytest.raises(ValueError):
        h.AngularPowerSpectrum([1.0, -0.5])
    with pytest.raises(ValueError):
        h.HarmonicCoeffs(1, np.array([[1.0, 5.0], [1j, 0.0]]))
