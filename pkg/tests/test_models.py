import json
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
import scipy.integrate
import scipy.special as sps

from isospec import harmonics as h
from isospec import models, special


# --- special functions (scipy is the cross-check here) ---

@pytest.mark.parametrize("x", [0.0, 1e-6, 5e-4, 0.3, 2.0, 7.5, 19.0, 40.0, 300.0])
def test_spherical_jn_all_against_scipy(x):
    got = special.spherical_jn_all(30, x)
    ref = sps.spherical_jn(np.arange(31), x)
    assert np.abs(got - ref).max() < 2e-15


@pytest.mark.parametrize("x", [0.1, 1.0, 5.0, 30.0])
def test_spherical_in_ratio_against_scipy(x):
    got = special.spherical_in_ratio(20, x)
    ref = sps.spherical_in(np.arange(21), x) / sps.spherical_in(0, x)
    assert np.allclose(got, ref, rtol=1e-13, atol=1e-300)


# --- closed forms versus independent quadrature ---

ZOO = [
    models.LaplaceBeltrami(1.0),
    models.LaplaceBeltrami(0.3),
    models.GeneratingInvPow(0.5, 3),
    models.GeneratingInvPow(0.3, 5),
    models.PoissonKernelPow(0.4, 3),
    models.PoissonKernelPow(0.6, 4),
    models.ExpKappa(2.0),
    models.ExpKappa(40.0),
    models.ExpJ0(1.5),
    models.BesselI0Product(1.2),
    models.MaternRestricted(1.0, 0.5, 0.5),
]


@pytest.mark.parametrize("model", ZOO, ids=lambda m: f"{m.variant}{m.params()}")
def test_spectrum_matches_adaptive_quadrature_of_covariance(model):
    f = models.model_spectrum(model, 16).f
    for l in (0, 1, 2, 5, 9, 16):
        ref = 2 * np.pi * scipy.integrate.quad(
            lambda g: model.covariance(g) * sps.eval_legendre(l, np.cos(g)) * np.sin(g),
            0,
            np.pi,
            limit=400,
            epsabs=1e-12,
            epsrel=1e-12,
        )[0]
        assert f[l] == pytest.approx(ref, abs=1e-10)


def test_laplace_beltrami_rational_value():
    c = Fraction(1)
    exact = [1 / (l * (l + 1) + c * c) ** 2 for l in range(5)]
    f = models.LaplaceBeltrami(1.0).spectrum(4).f
    assert [float(e) for e in exact] == list(f)
    assert f[2] == 1 / 49


def test_exp_kappa_is_a_probability_density():
    assert models.ExpKappa(1.0).spectrum(0)[0] == pytest.approx(1.0, abs=1e-15)


def test_matern_half_is_positive_and_higher_orders_are_not():
    f = models.model_spectrum(models.MaternRestricted(1.0, 0.5, 0.5), 32).f
    assert f.min() > 0
    for nu in (1.5, 2.5):
        with pytest.raises(h.NotPositiveDefiniteError) as ei:
            models.model_spectrum(models.MaternRestricted(1.0, nu, 0.5), 8)
        assert 2 in ei.value.degrees


@pytest.mark.parametrize(
    "ctor, param",
    [
        (lambda: models.LaplaceBeltrami(-1.0), "c"),
        (lambda: models.GeneratingInvPow(1.0), "z"),
        (lambda: models.PoissonKernelPow(0.5, 1), "n"),
        (lambda: models.ExpKappa(0.0), "kappa"),
        (lambda: models.MaternRestricted(1.0, 0.7, 1.0), "nu"),
        (lambda: models.SpectralMeasure(density="nope"), "density"),
    ],
)
def test_parameter_validation_names_parameter(ctor, param):
    with pytest.raises(models.ModelParameterError) as ei:
        ctor()
    assert ei.value.param == param


def test_descriptor_round_trip():
    for m in ZOO:
        assert models.model_from_json(models.model_to_json(m)) == m
    sm = models.model_from_dict({"variant": "SpectralMeasure", "params": {"density": "laplace_beltrami", "c": 2.0}})
    assert json.loads(models.model_to_json(sm)) == {
        "variant": "SpectralMeasure",
        "params": {"density": "laplace_beltrami", "c": 2.0},
    }
    with pytest.raises(models.ModelParameterError) as ei:
        models.model_from_dict({"variant": "NoSuch"})
    assert ei.value.param == "variant"


# --- 3-D spectral measure restricted to the sphere ---

def test_spectral_measure_covariance_closed_form():
    c = 1.3
    m = models.SpectralMeasure(density="laplace_beltrami", density_params={"c": c})
    g = np.array([0.0, 0.2, 1.0, 2.0, np.pi])
    r = 2 * np.sin(g / 2)
    assert np.abs(m.covariance(g) - np.exp(-c * r) / (8 * np.pi * c)).max() < 1e-12


def test_poisson_integral_l0_against_mpmath_and_analytic():
    c = 1.0
    S = models.laplace_beltrami_density(c)
    res = models.poisson_formula_spectrum(S, 0, full_output=True)
    assert res.tail_bound <= 1e-9
    oracle = mpmath.quadosc(
        lambda lam: 4 * mpmath.pi * (mpmath.sin(lam) / lam) ** 2 * 2 / (2 * mpmath.pi) ** 2 * lam**2 / (lam**2 + c * c) ** 2,
        [0, mpmath.inf],
        omega=2,
    )
    assert res.value == pytest.approx(float(oracle), abs=1e-9)
    assert res.value == pytest.approx((1 - math.exp(-2 * c) * (1 + 2 * c)) / (4 * c**3), abs=1e-9)
    # the rational closed form (l(l+1)+c^2)^-2 would give 1 here
    assert abs(res.value - 1.0) > 0.8


@pytest.mark.parametrize("l", [1, 3])
def test_poisson_integral_matches_transform_of_restricted_covariance(l):
    c = 1.0
    S = models.laplace_beltrami_density(c)
    cov = lambda g: np.exp(-2 * c * np.sin(g / 2)) / (8 * np.pi * c)
    ref = h.legendre_transform(cov, l, nquad=80, variable="angle")[l]
    assert models.poisson_formula_spectrum(S, l) == pytest.approx(ref, abs=1e-10)


def test_poisson_integrand_identity():
    lam = np.array([0.5, 3.0, 17.0])
    for l in (0, 2, 5):
        J = sps.jv(l + 0.5, lam)
        assert np.allclose(models.poisson_integrand(l, lam), 2 * np.pi**2 * J**2 / lam, rtol=1e-13)


def test_poisson_tail_failure_is_reported():
    heavy = lambda lam: np.ones_like(np.asarray(lam, float))  # no decay, tail diverges
    with pytest.raises(models.PoissonTailError):
        models.poisson_formula_spectrum(heavy, 0, lambda_cap=1e4)
