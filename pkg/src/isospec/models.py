"""Isotropic covariance models on the sphere and their angular spectra.

Every model exposes ``covariance(gamma)`` (central angle in radians) and
``spectrum(lmax)``. Closed-form spectra are used where they exist, otherwise the
spectrum is the Funk-Hecke transform of the covariance.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, ClassVar

import numpy as np
from scipy import special as sps

from .harmonics import (
    AngularPowerSpectrum,
    check_spectrum,
    gauss_legendre,
    legendre_all,
    legendre_transform,
    covariance_eval,
)
from .special import spherical_in_ratio, spherical_jn_all

__all__ = [
    "ModelParameterError",
    "PoissonTailError",
    "CovarianceModel",
    "LaplaceBeltrami",
    "GeneratingInvPow",
    "PoissonKernelPow",
    "ExpKappa",
    "ExpJ0",
    "BesselI0Product",
    "MaternRestricted",
    "SpectralMeasure",
    "DENSITIES",
    "laplace_beltrami_density",
    "model_covariance",
    "model_spectrum",
    "poisson_integrand",
    "poisson_formula_spectrum",
    "PoissonResult",
    "model_from_dict",
    "model_from_json",
    "model_to_json",
]

# Landau: |J_nu(x)| <= b x^{-1/3} for all nu > 0, x > 0
_LANDAU_B = 0.7858


class ModelParameterError(ValueError):
    """A model parameter is outside its admissible range."""

    def __init__(self, param: str, message: str):
        self.param = param
        super().__init__(f"{param}: {message}")


class PoissonTailError(RuntimeError):
    """The tail of a Poisson-formula integral could not be bounded below tolerance."""

    def __init__(self, bound: float, lambda_max: float):
        self.bound = bound
        self.lambda_max = lambda_max
        super().__init__(f"tail bound {bound:.3e} above tolerance at lambda_max={lambda_max:.3e}")


def _gamma_array(gamma) -> np.ndarray:
    g = np.asarray(gamma, dtype=float)
    if np.any(g < -1e-12) or np.any(g > math.pi + 1e-12) or not np.all(np.isfinite(g)):
        raise ValueError("gamma must lie in [0, pi]")
    return np.clip(g, 0.0, math.pi)


def _scalar(v: np.ndarray):
    return float(v) if np.ndim(v) == 0 else v


def _positive(name: str, v: float) -> float:
    v = float(v)
    if not (v > 0 and math.isfinite(v)):
        raise ModelParameterError(name, f"must be positive and finite, got {v}")
    return v


def _open_unit(name: str, v: float) -> float:
    v = float(v)
    if not 0 < v < 1:
        raise ModelParameterError(name, f"must lie in (0, 1), got {v}")
    return v


def _int_at_least(name: str, v, lo: int) -> int:
    if int(v) != v or v < lo:
        raise ModelParameterError(name, f"must be an integer >= {lo}, got {v}")
    return int(v)


class CovarianceModel:
    """Base class; subclasses are frozen dataclasses registered by variant name."""

    variant: ClassVar[str] = ""
    registry: ClassVar[dict[str, type]] = {}

    def __init_subclass__(cls, **kw):
        super().__init_subclass__(**kw)
        CovarianceModel.registry[cls.variant] = cls

    def covariance(self, gamma):
        raise NotImplementedError

    def spectrum(self, lmax: int) -> AngularPowerSpectrum:
        raise NotImplementedError

    def params(self) -> dict[str, Any]:
        return asdict(self)

    def to_dict(self) -> dict[str, Any]:
        return {"variant": self.variant, "params": self.params()}


@dataclass(frozen=True)
class LaplaceBeltrami(CovarianceModel):
    """Spectrum ``(l(l+1) + c^2)^{-2}``; covariance is its Legendre series cut at ``series_lmax``."""

    variant: ClassVar[str] = "LaplaceBeltrami"
    c: float
    series_lmax: int = 64

    def __post_init__(self):
        _positive("c", self.c)
        _int_at_least("series_lmax", self.series_lmax, 0)

    def spectrum(self, lmax):
        l = np.arange(lmax + 1, dtype=float)
        return AngularPowerSpectrum((l * (l + 1) + self.c**2) ** -2.0)

    def covariance(self, gamma):
        g = _gamma_array(gamma)
        return _scalar(covariance_eval(self.spectrum(self.series_lmax), np.cos(g)))


@dataclass(frozen=True)
class GeneratingInvPow(CovarianceModel):
    """``(1 - 2 z cos g + z^2)^{-(n-2)/2}``."""

    variant: ClassVar[str] = "GeneratingInvPow"
    z: float
    n: int = 3

    def __post_init__(self):
        _open_unit("z", self.z)
        _int_at_least("n", self.n, 3)

    def covariance(self, gamma):
        x = np.cos(_gamma_array(gamma))
        return _scalar((1 - 2 * self.z * x + self.z**2) ** (-(self.n - 2) / 2.0))

    def spectrum(self, lmax):
        if self.n == 3:
            l = np.arange(lmax + 1)
            return AngularPowerSpectrum(4 * np.pi * self.z**l / (2 * l + 1))
        return legendre_transform(self.covariance, lmax, nquad=_nquad_analytic(lmax), variable="angle")


@dataclass(frozen=True)
class PoissonKernelPow(CovarianceModel):
    """``(1 - a^2) / (1 - 2 a cos g + a^2)^{n/2}``."""

    variant: ClassVar[str] = "PoissonKernelPow"
    a: float
    n: int = 3

    def __post_init__(self):
        _open_unit("a", self.a)
        _int_at_least("n", self.n, 2)

    def covariance(self, gamma):
        x = np.cos(_gamma_array(gamma))
        return _scalar((1 - self.a**2) / (1 - 2 * self.a * x + self.a**2) ** (self.n / 2.0))

    def spectrum(self, lmax):
        if self.n == 3:
            return AngularPowerSpectrum(4 * np.pi * self.a ** np.arange(lmax + 1))
        return legendre_transform(self.covariance, lmax, nquad=_nquad_analytic(lmax), variable="angle")


@dataclass(frozen=True)
class ExpKappa(CovarianceModel):
    """von Mises-Fisher density ``kappa exp(kappa cos g) / (4 pi sinh kappa)``."""

    variant: ClassVar[str] = "ExpKappa"
    kappa: float

    def __post_init__(self):
        _positive("kappa", self.kappa)

    def covariance(self, gamma):
        k = self.kappa
        x = np.cos(_gamma_array(gamma))
        # rewritten to avoid overflow of sinh and exp at large kappa
        return _scalar(k / (2 * np.pi * -np.expm1(-2 * k)) * np.exp(k * (x - 1)))

    def spectrum(self, lmax):
        return AngularPowerSpectrum(spherical_in_ratio(lmax, self.kappa))


@dataclass(frozen=True)
class ExpJ0(CovarianceModel):
    """``exp(kappa cos g) J_0(kappa sin g)``."""

    variant: ClassVar[str] = "ExpJ0"
    kappa: float

    def __post_init__(self):
        _positive("kappa", self.kappa)

    def covariance(self, gamma):
        g = _gamma_array(gamma)
        return _scalar(np.exp(self.kappa * np.cos(g)) * sps.j0(self.kappa * np.sin(g)))

    def spectrum(self, lmax):
        l = np.arange(lmax + 1)
        logt = l * math.log(self.kappa) - sps.gammaln(l + 1)
        return AngularPowerSpectrum(np.exp(logt) * 4 * np.pi / (2 * l + 1))


@dataclass(frozen=True)
class BesselI0Product(CovarianceModel):
    """Covariance with Legendre coefficients ``kappa^l / (l!)^2``.

    Closed form ``J_0(sqrt(2 kappa (1 - x))) I_0(sqrt(2 kappa (1 + x)))`` with ``x = cos g``.
    """

    variant: ClassVar[str] = "BesselI0Product"
    kappa: float

    def __post_init__(self):
        _positive("kappa", self.kappa)

    def covariance(self, gamma):
        x = np.cos(_gamma_array(gamma))
        k = self.kappa
        return _scalar(sps.j0(np.sqrt(2 * k * (1 - x))) * sps.i0(np.sqrt(2 * k * (1 + x))))

    def spectrum(self, lmax):
        l = np.arange(lmax + 1)
        logt = l * math.log(self.kappa) - 2 * sps.gammaln(l + 1)
        return AngularPowerSpectrum(np.exp(logt) * 4 * np.pi / (2 * l + 1))


_MATERN_POLY = {
    0.5: (1.0,),
    1.5: (1.0, 1.0),
    2.5: (1.0, 1.0, 1.0 / 3.0),
}


@dataclass(frozen=True)
class MaternRestricted(CovarianceModel):
    """Half-integer Matern correlation evaluated at the central angle.

    Only nu = 1/2 is positive definite on the sphere in this form; the spectrum of
    the other orders has negative entries and :meth:`spectrum` raises.
    """

    variant: ClassVar[str] = "MaternRestricted"
    sigma2: float
    nu: float
    theta: float

    def __post_init__(self):
        _positive("sigma2", self.sigma2)
        _positive("theta", self.theta)
        if float(self.nu) not in _MATERN_POLY:
            raise ModelParameterError("nu", f"only 1/2, 3/2, 5/2 are supported, got {self.nu}")

    def covariance(self, gamma):
        t = self.theta * _gamma_array(gamma)
        poly = np.polynomial.polynomial.polyval(t, _MATERN_POLY[float(self.nu)])
        return _scalar(self.sigma2 * poly * np.exp(-t))

    def spectrum(self, lmax):
        return legendre_transform(self.covariance, lmax, nquad=max(4 * lmax + 8, 256), variable="angle")


def laplace_beltrami_density(c: float) -> Callable[[np.ndarray], np.ndarray]:
    """3-D spectral density ``2/(2 pi)^2 lambda^2 / (lambda^2 + c^2)^2``."""
    c = _positive("c", c)

    def S(lam):
        lam = np.asarray(lam, dtype=float)
        return 2.0 / (2 * np.pi) ** 2 * lam**2 / (lam**2 + c * c) ** 2

    return S


DENSITIES: dict[str, Callable[..., Callable]] = {"laplace_beltrami": laplace_beltrami_density}


@dataclass(frozen=True)
class SpectralMeasure(CovarianceModel):
    """Restriction to the sphere of a 3-D isotropic covariance with spectral density ``S``.

    ``density`` names an entry of :data:`DENSITIES` and ``density_params`` its
    arguments; alternatively pass ``S`` directly (not serializable).
    """

    variant: ClassVar[str] = "SpectralMeasure"
    density: str | None = None
    density_params: dict = field(default_factory=dict)
    S: Callable | None = field(default=None, compare=False, repr=False)
    tol: float = 1e-10

    def __post_init__(self):
        if self.S is None:
            if self.density not in DENSITIES:
                raise ModelParameterError("density", f"unknown density {self.density!r}")
            object.__setattr__(self, "S", DENSITIES[self.density](**self.density_params))

    def params(self):
        if self.density is None:
            raise ValueError("a SpectralMeasure built from a bare callable cannot be serialized")
        return {"density": self.density, **self.density_params}

    def covariance(self, gamma):
        g = _gamma_array(gamma)
        r = 2 * np.sin(g / 2)
        vals = np.array([_hankel_j0(self.S, float(ri), self.tol) for ri in np.ravel(r)])
        return _scalar(vals.reshape(r.shape))

    def spectrum(self, lmax):
        f = [poisson_formula_spectrum(self.S, l, tol=self.tol) for l in range(lmax + 1)]
        return check_spectrum(np.array(f))


def _nquad_analytic(lmax: int) -> int:
    return max(2 * lmax + 2, 160)


# ---------------------------------------------------------------------------
# Poisson formula and its supporting integrals
# ---------------------------------------------------------------------------

_PANEL_NODES = 32
_TAIL_NODES = 200


def _tail_moment(S: Callable, lam0: float, power: float) -> float:
    """``int_{lam0}^inf lam^{-power} S(lam) dlam`` via ``lam = lam0 / u^3``."""
    u, w = gauss_legendre(_TAIL_NODES)
    u = 0.5 * (u + 1.0)
    w = 0.5 * w
    lam = lam0 / u**3
    jac = 3.0 * lam0 / u**4
    return float(np.sum(w * lam ** (-power) * np.asarray(S(lam), float) * jac))


def _panel_integral(fn: Callable[[np.ndarray], np.ndarray], edges: np.ndarray) -> float:
    t, w = gauss_legendre(_PANEL_NODES)
    a, b = edges[:-1, None], edges[1:, None]
    x = 0.5 * (b - a) * t + 0.5 * (a + b)
    vals = fn(x.ravel()).reshape(x.shape)
    return float(np.sum(vals * w * 0.5 * (b - a)))


def _find_cutoff(bound: Callable[[float], float], start: float, tol: float, cap: float) -> tuple[float, float]:
    lam = start
    b = bound(lam)
    while b > tol:
        if lam >= cap:
            raise PoissonTailError(b, lam)
        lam = min(2 * lam, cap)
        b = bound(lam)
    return lam, b


def _hankel_j0(S: Callable, r: float, tol: float, cap: float = 1e12) -> float:
    """``int_0^inf j_0(lam r) S(lam) dlam`` with ``|j_0(t)| <= 1/t`` for the tail."""
    if r == 0.0:
        head = _panel_integral(lambda x: np.asarray(S(x), float), np.linspace(0.0, 16.0, 17))
        return head + _tail_moment(S, 16.0, 0.0)
    lam_max, _ = _find_cutoff(lambda L: _tail_moment(S, L, 1.0) / r, 16.0, tol, cap)
    fn = lambda x: np.sinc(x * r / np.pi) * np.asarray(S(x), float)
    return _panel_integral(fn, _graded_edges(lam_max, math.pi / r))


def _graded_edges(lam_max: float, max_width: float) -> np.ndarray:
    # geometric growth away from the origin, capped at the oscillation half period
    edges = [0.0]
    while edges[-1] < lam_max:
        edges.append(edges[-1] + min(max(1.0, 0.25 * edges[-1]), max_width))
    return np.array(edges)


def poisson_integrand(l: int, lam) -> np.ndarray:
    """``2 pi^2 J_{l+1/2}(lam)^2 / lam``, the spectrum of a unit point mass at ``lam``."""
    lam = np.asarray(lam, dtype=float)
    jl = spherical_jn_all(l, lam)[l]
    # J_{l+1/2}^2 / lam = (2 / pi) j_l^2
    return 4 * np.pi * jl * jl


@dataclass(frozen=True)
class PoissonResult:
    value: float
    tail_bound: float
    lambda_max: float
    panels: int

    def __float__(self) -> float:
        return self.value


def poisson_formula_spectrum(
    S: Callable[[np.ndarray], np.ndarray],
    l: int,
    tol: float = 1e-9,
    lambda_cap: float = 1e8,
    full_output: bool = False,
):
    """Spherical spectrum ``2 pi^2 int_0^inf J_{l+1/2}^2(lam) / lam S(lam) dlam``.

    Integrates over panels of length pi (the asymptotic spacing of Bessel zeros)
    up to a cutoff chosen so the Landau bound on the remaining tail is at most
    ``tol``. Raises :class:`PoissonTailError` if no cutoff below ``lambda_cap``
    achieves that.
    """
    if int(l) != l or l < 0:
        raise ValueError("degree must be a nonnegative integer")
    l = int(l)
    coef = 2 * np.pi**2 * _LANDAU_B**2
    start = max(4.0 * math.pi, float(l) + math.pi)
    lam_max, bound = _find_cutoff(lambda L: coef * _tail_moment(S, L, 5.0 / 3.0), start, tol, lambda_cap)
    n = int(math.ceil(lam_max / math.pi))
    edges = math.pi * np.arange(n + 1, dtype=float)
    value = _panel_integral(lambda x: poisson_integrand(l, x) * np.asarray(S(x), float), edges)
    if value < 0:
        if value < -tol:
            raise ValueError(f"density produced a negative spectrum value {value:.3e}")
        value = 0.0
    res = PoissonResult(value, bound, float(edges[-1]), n)
    return res if full_output else value


# ---------------------------------------------------------------------------
# Dispatch and serialization
# ---------------------------------------------------------------------------

def model_covariance(model: CovarianceModel, gamma):
    """Covariance at central angle ``gamma`` (scalar or array)."""
    return model.covariance(gamma)


def model_spectrum(model: CovarianceModel, lmax: int) -> AngularPowerSpectrum:
    if int(lmax) != lmax or lmax < 0:
        raise ValueError("lmax must be a nonnegative integer")
    return model.spectrum(int(lmax))


def model_from_dict(d: dict) -> CovarianceModel:
    if not isinstance(d, dict) or "variant" not in d:
        raise ModelParameterError("variant", "descriptor must be an object with a 'variant' key")
    cls = CovarianceModel.registry.get(d["variant"])
    if cls is None:
        raise ModelParameterError("variant", f"unknown variant {d['variant']!r}")
    params = dict(d.get("params", {}))
    if cls is SpectralMeasure:
        name = params.pop("density", None)
        tol = params.pop("tol", 1e-10)
        return SpectralMeasure(density=name, density_params=params, tol=tol)
    try:
        return cls(**params)
    except TypeError as exc:
        raise ModelParameterError("params", str(exc)) from None


def model_from_json(text: str) -> CovarianceModel:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParameterError("json", str(exc)) from None
    return model_from_dict(d)


def model_to_json(model: CovarianceModel) -> str:
    return json.dumps(model.to_dict(), sort_keys=True)
