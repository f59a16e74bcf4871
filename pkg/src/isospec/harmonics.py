"""Legendre functions, spherical harmonics and spherical harmonic transforms.

Harmonics are fully normalized with the Condon-Shortley phase. The sampling grid
is Gauss-Legendre in colatitude times an equispaced longitude ring, with no
samples at the poles.

Angular power spectra follow the convention
``C(cos g) = sum_l f_l (2l+1)/(4 pi) P_l(cos g)``, hence
``f_l = 2 pi int_{-1}^{1} C(x) P_l(x) dx``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "HarmonicCoeffs",
    "SphereGrid",
    "SphereMap",
    "AngularPowerSpectrum",
    "NotPositiveDefiniteError",
    "legendre",
    "legendre_all",
    "assoc_legendre_table",
    "spherical_harmonic",
    "gauss_legendre",
    "synthesize",
    "synthesize_points",
    "analyze",
    "legendre_transform",
    "check_spectrum",
    "covariance_eval",
]

CLAMP_TOL = 1e-12
INDEFINITE_TOL = 1e-8
_REALITY_TOL = 1e-11


class NotPositiveDefiniteError(ValueError):
    """A Legendre transform produced a clearly negative spectrum entry."""

    def __init__(self, degrees: Sequence[int], values: Sequence[float]):
        self.degrees = list(degrees)
        self.values = list(values)
        pairs = ", ".join(f"l={l}: {v:.3e}" for l, v in zip(degrees, values))
        super().__init__(f"covariance is not positive definite ({pairs})")


# ---------------------------------------------------------------------------
# Containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HarmonicCoeffs:
    """Triangular array ``Z_l^m`` of a real field, stored for ``m >= 0``.

    ``z[l, m]`` holds ``Z_l^m`` for ``0 <= m <= l``; entries with ``m > l`` are 0.
    Negative orders follow from ``Z_l^{-m} = (-1)^m conj(Z_l^m)``.
    """

    lmax: int
    z: np.ndarray

    def __post_init__(self) -> None:
        z = np.array(self.z, dtype=complex)
        n = self.lmax + 1
        if self.lmax < 0 or z.shape != (n, n):
            raise ValueError(f"z must have shape ({n}, {n})")
        if not np.all(np.isfinite(z)):
            raise ValueError("coefficients must be finite")
        if np.any(np.triu(z, 1) != 0):
            raise ValueError("entries with m > l must be zero")
        scale = max(1.0, float(np.abs(z).max(initial=0.0)))
        if np.any(np.abs(z[:, 0].imag) > _REALITY_TOL * scale):
            raise ValueError("Z_l^0 must be real")
        z[:, 0] = z[:, 0].real
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @classmethod
    def zeros(cls, lmax: int) -> "HarmonicCoeffs":
        return cls(lmax, np.zeros((lmax + 1, lmax + 1), complex))

    @classmethod
    def from_blocks(cls, blocks: Sequence[np.ndarray], tol: float = _REALITY_TOL) -> "HarmonicCoeffs":
        """Build from full blocks ``[Z_l^{-l}, ..., Z_l^{l}]`` after checking reality."""
        lmax = len(blocks) - 1
        z = np.zeros((lmax + 1, lmax + 1), complex)
        for l, b in enumerate(blocks):
            b = np.asarray(b, dtype=complex)
            if b.shape != (2 * l + 1,):
                raise ValueError(f"block {l} must have length {2 * l + 1}")
            m = np.arange(1, l + 1)
            mirror = (-1.0) ** m * np.conj(b[l + m])
            scale = max(1.0, float(np.abs(b).max()))
            if np.any(np.abs(b[l - m] - mirror) > tol * scale) or abs(b[l].imag) > tol * scale:
                raise ValueError(f"block {l} violates the real-field constraint")
            z[l, : l + 1] = b[l:]
            z[l, 0] = b[l].real
        return cls(lmax, z)

    def block(self, l: int) -> np.ndarray:
        """Full vector ``Z_l^m`` for ``m = -l..l``."""
        pos = self.z[l, : l + 1]
        m = np.arange(1, l + 1)
        neg = ((-1.0) ** m * np.conj(pos[1:]))[::-1]
        return np.concatenate([neg, pos])

    def power(self) -> np.ndarray:
        """``sum_m |Z_l^m|^2`` per degree."""
        a = np.abs(self.z) ** 2
        return a[:, 0] + 2.0 * a[:, 1:].sum(axis=1)

    def truncate(self, lmax: int) -> "HarmonicCoeffs":
        return HarmonicCoeffs(lmax, self.z[: lmax + 1, : lmax + 1])


@dataclass(frozen=True)
class AngularPowerSpectrum:
    """Nonnegative vector ``f_0 .. f_lmax``."""

    f: np.ndarray

    def __post_init__(self) -> None:
        f = np.array(self.f, dtype=float).ravel()
        if f.size == 0 or not np.all(np.isfinite(f)):
            raise ValueError("spectrum must be a nonempty finite vector")
        if np.any(f < 0):
            raise ValueError(f"spectrum must be nonnegative; min {f.min():.3e}")
        f.setflags(write=False)
        object.__setattr__(self, "f", f)

    @property
    def lmax(self) -> int:
        return self.f.size - 1

    def __getitem__(self, l: int) -> float:
        return float(self.f[l])

    def __len__(self) -> int:
        return self.f.size


@dataclass(frozen=True)
class SphereGrid:
    """Gauss-Legendre colatitudes times equispaced longitudes."""

    colatitudes: np.ndarray
    colat_weights: np.ndarray
    longitudes: np.ndarray
    lmax_exact: int

    def __post_init__(self) -> None:
        if self.colatitudes.size < self.lmax_exact + 1:
            raise ValueError("need at least lmax_exact + 1 colatitudes")
        if self.longitudes.size < 2 * self.lmax_exact + 1:
            raise ValueError("need at least 2 lmax_exact + 1 longitudes")
        if np.any(self.colat_weights <= 0):
            raise ValueError("quadrature weights must be positive")
        for a in (self.colatitudes, self.colat_weights, self.longitudes):
            a.setflags(write=False)

    @classmethod
    def gauss(cls, lmax: int, n_theta: int | None = None, n_phi: int | None = None) -> "SphereGrid":
        n_theta = lmax + 1 if n_theta is None else n_theta
        n_phi = 2 * lmax + 2 if n_phi is None else n_phi
        x, w = gauss_legendre(n_theta)
        # descending x gives ascending colatitude
        theta = np.arccos(x[::-1]).copy()
        return cls(theta, w[::-1].copy(), 2 * np.pi * np.arange(n_phi) / n_phi, lmax)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.colatitudes.size, self.longitudes.size)


@dataclass(frozen=True)
class SphereMap:
    """Real field samples on a :class:`SphereGrid`, shape ``(n_theta, n_phi)``."""

    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("map values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def integrate(self, values: np.ndarray | None = None) -> float:
        """Quadrature of ``values`` (default: the map) over the sphere."""
        v = self.values if values is None else values
        dphi = 2 * np.pi / self.grid.longitudes.size
        return float(self.grid.colat_weights @ v.sum(axis=1) * dphi)


# ---------------------------------------------------------------------------
# Legendre functions
# ---------------------------------------------------------------------------

def _check_x(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-12) or not np.all(np.isfinite(x)):
        raise ValueError("argument must lie in [-1, 1]")
    return np.clip(x, -1.0, 1.0)


def legendre_all(lmax: int, x) -> np.ndarray:
    """``P_0(x) .. P_lmax(x)`` stacked on the first axis (three-term recurrence)."""
    x = _check_x(x)
    out = np.empty((lmax + 1,) + x.shape)
    out[0] = 1.0
    if lmax >= 1:
        out[1] = x
    for l in range(1, lmax):
        out[l + 1] = ((2 * l + 1) * x * out[l] - l * out[l - 1]) / (l + 1)
    return out


def legendre(l: int, x):
    """Legendre polynomial ``P_l(x)`` with ``P_l(1) = 1``."""
    if int(l) != l or l < 0:
        raise ValueError("degree must be a nonnegative integer")
    v = legendre_all(int(l), x)[int(l)]
    return float(v) if v.ndim == 0 else v


def assoc_legendre_table(lmax: int, theta) -> np.ndarray:
    """``Y_l^m(theta, 0)`` for ``0 <= m <= l <= lmax``; shape ``(lmax+1, lmax+1) + theta.shape``.

    Ascending-degree recurrence at fixed order, seeded by the sectoral term.
    """
    theta = np.asarray(theta, dtype=float)
    x = np.cos(theta)
    s = np.sin(theta)
    out = np.zeros((lmax + 1, lmax + 1) + theta.shape)
    pmm = np.full(theta.shape, 1.0 / math.sqrt(4 * math.pi))
    for m in range(lmax + 1):
        if m > 0:
            pmm = -math.sqrt((2 * m + 1) / (2.0 * m)) * s * pmm
        out[m, m] = pmm
        if m + 1 <= lmax:
            out[m + 1, m] = math.sqrt(2 * m + 3) * x * pmm
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4.0 * l * l - 1) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1) ** 2 - 1))
            out[l, m] = a * (x * out[l - 1, m] - b * out[l - 2, m])
    return out


def spherical_harmonic(l: int, m: int, theta, phi):
    """Fully normalized ``Y_l^m(theta, phi)`` with the Condon-Shortley phase."""
    if int(l) != l or l < 0 or int(m) != m or abs(m) > l:
        raise ValueError(f"invalid indices (l={l}, m={m})")
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < -1e-12) or np.any(theta > math.pi + 1e-12):
        raise ValueError("theta must lie in [0, pi]")
    am = abs(m)
    p = assoc_legendre_table(l, theta)[l, am]
    y = p * np.exp(1j * am * np.asarray(phi, dtype=float))
    if m < 0:
        y = (-1) ** am * np.conj(y)
    return complex(y) if np.ndim(y) == 0 else y


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes (ascending) and weights on [-1, 1]."""
    if int(n) != n or n < 1:
        raise ValueError("number of nodes must be a positive integer")
    return np.polynomial.legendre.leggauss(int(n))


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------

def _degree_mask(lmax: int, degrees: Iterable[int] | None) -> np.ndarray:
    mask = np.ones(lmax + 1, bool)
    if degrees is not None:
        mask[:] = False
        for l in degrees:
            if 0 <= l <= lmax:
                mask[l] = True
    return mask


def synthesize(
    c: HarmonicCoeffs,
    grid: SphereGrid,
    degrees: Iterable[int] | None = None,
    fast: bool = False,
) -> SphereMap:
    """Evaluate ``sum_l sum_m Z_l^m Y_l^m`` on the grid, optionally restricted to ``degrees``."""
    if c.lmax > grid.lmax_exact:
        raise ValueError(f"coefficient band limit {c.lmax} exceeds grid limit {grid.lmax_exact}")
    mask = _degree_mask(c.lmax, degrees)
    p = assoc_legendre_table(c.lmax, grid.colatitudes)
    z = c.z * mask[:, None]
    fm = np.einsum("lm,lmj->jm", z, p)
    fm[:, 1:] *= 2.0
    nphi = grid.longitudes.size
    if fast:
        buf = np.zeros((fm.shape[0], nphi), complex)
        buf[:, : c.lmax + 1] = fm
        vals = (np.fft.ifft(buf, axis=1) * nphi).real
    else:
        e = np.exp(1j * np.outer(np.arange(c.lmax + 1), grid.longitudes))
        vals = (fm @ e).real
    return SphereMap(grid, vals)


def synthesize_points(c: HarmonicCoeffs, theta, phi, degrees: Iterable[int] | None = None) -> np.ndarray:
    """Evaluate the field at arbitrary locations (arrays of equal shape)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    mask = _degree_mask(c.lmax, degrees)
    p = assoc_legendre_table(c.lmax, theta)
    z = c.z * mask[:, None]
    fm = np.einsum("lm,lm...->m...", z, p)
    m = np.arange(c.lmax + 1).reshape((-1,) + (1,) * theta.ndim)
    terms = fm * np.exp(1j * m * phi)
    return terms[0].real + 2.0 * terms[1:].sum(axis=0).real


def analyze(m: SphereMap, lmax: int, fast: bool = False) -> HarmonicCoeffs:
    """Quadrature realization of ``Z_l^m = int X conj(Y_l^m) dOmega``."""
    grid = m.grid
    if lmax > grid.lmax_exact:
        raise ValueError(f"requested band limit {lmax} exceeds grid limit {grid.lmax_exact}")
    nphi = grid.longitudes.size
    if fast:
        g = np.fft.fft(m.values, axis=1)[:, : lmax + 1] * (2 * np.pi / nphi)
    else:
        e = np.exp(-1j * np.outer(grid.longitudes, np.arange(lmax + 1)))
        g = m.values @ e * (2 * np.pi / nphi)
    p = assoc_legendre_table(lmax, grid.colatitudes)
    z = np.einsum("j,lmj,jm->lm", grid.colat_weights, p, g)
    z = np.tril(z)
    z[:, 0] = z[:, 0].real
    return HarmonicCoeffs(lmax, z)


def _call_vectorized(fn: Callable, x: np.ndarray) -> np.ndarray:
    try:
        v = np.asarray(fn(x), dtype=float)
        if v.shape == x.shape:
            return v
    except (TypeError, ValueError):
        pass
    return np.array([float(fn(float(t))) for t in x])


def legendre_transform(
    C: Callable[[np.ndarray], np.ndarray],
    lmax: int,
    nquad: int | None = None,
    variable: str = "cos",
) -> AngularPowerSpectrum:
    """Funk-Hecke transform ``f_l = 2 pi int_{-1}^{1} C(x) P_l(x) dx``.

    ``variable="angle"`` means ``C`` takes the central angle and the integral is
    taken as ``2 pi int_0^pi C(g) P_l(cos g) sin g dg``; this keeps Gauss
    convergence for covariances that are smooth in the angle but not in its cosine.

    Negative entries above ``-1e-12`` are round-off and clamped to 0. Entries in
    ``[-1e-8, -1e-12)`` are clamped with a warning. Anything below ``-1e-8``
    raises :class:`NotPositiveDefiniteError`.
    """
    nquad = max(2 * lmax + 2, 128) if nquad is None else nquad
    if nquad < lmax + 1:
        raise ValueError("nquad must be at least lmax + 1")
    t, w = gauss_legendre(nquad)
    if variable == "cos":
        x = t
        cx = _call_vectorized(C, x)
    elif variable == "angle":
        g = 0.5 * np.pi * (t + 1.0)
        x = np.cos(g)
        w = w * 0.5 * np.pi * np.sin(g)
        cx = _call_vectorized(C, g)
    else:
        raise ValueError("variable must be 'cos' or 'angle'")
    f = 2 * np.pi * legendre_all(lmax, x) @ (w * cx)
    return check_spectrum(f)


def check_spectrum(f: np.ndarray) -> AngularPowerSpectrum:
    """Apply the round-off clamping policy of :func:`legendre_transform`."""
    f = np.asarray(f, dtype=float)
    bad = np.nonzero(f < -INDEFINITE_TOL)[0]
    if bad.size:
        raise NotPositiveDefiniteError(bad.tolist(), f[bad].tolist())
    soft = np.nonzero(f < -CLAMP_TOL)[0]
    if soft.size:
        warnings.warn(
            f"clamping small negative spectrum entries at degrees {soft.tolist()}",
            RuntimeWarning,
            stacklevel=3,
        )
    return AngularPowerSpectrum(np.where(f < 0, 0.0, f))


def covariance_eval(f: AngularPowerSpectrum | np.ndarray, cosgamma):
    """``sum_l f_l (2l+1)/(4 pi) P_l(cos g)``."""
    fv = f.f if isinstance(f, AngularPowerSpectrum) else np.asarray(f, dtype=float)
    x = _check_x(cosgamma)
    lmax = fv.size - 1
    coef = fv * (2 * np.arange(lmax + 1) + 1) / (4 * np.pi)
    # Clenshaw summation of the Legendre series
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    for l in range(lmax, 0, -1):
        b1, b2 = coef[l] + (2 * l + 1) / (l + 1) * x * b1 - (l + 1) / (l + 2) * b2, b1
    v = coef[0] + x * b1 - 0.5 * b2
    return float(v) if v.ndim == 0 else v
