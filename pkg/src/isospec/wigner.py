"""Wigner 3j symbols, Clebsch-Gordan and Gaunt coefficients, Wigner d/D matrices
and integration over SO(3) with respect to the normalized Haar measure.

Rotations use the z-y-z Euler convention: a triple ``(phi, theta, gamma)`` stands
for the matrix ``Rz(phi) @ Ry(theta) @ Rz(gamma)`` and

    D^l_{m,k}(phi, theta, gamma) = exp(-i m phi) d^l_{m,k}(theta) exp(-i k gamma),

so that ``Y_l^m(theta, phi) = sqrt((2l+1)/4pi) * conj(D^l_{m,0}(phi, theta, gamma))``
and ``Y_l^m(R^-1 x) = sum_k D^l_{k,m}(R) Y_l^k(x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "LMAX_SUPPORTED",
    "Rotation",
    "WignerDBlock",
    "wigner_3j",
    "wigner_3j_table",
    "wigner_3j_zero",
    "clebsch_gordan",
    "gaunt",
    "wigner_d",
    "wigner_D",
    "wigner_D_stack",
    "rotate_coefficients",
    "sample_haar_rotation",
    "so3_quadrature",
    "so3_integral",
]

LMAX_SUPPORTED = 256
"""Hard upper bound on degrees accepted by the 3j routines."""

_FLOAT_3J_MAX = 24  # log-gamma kernel keeps ~1e-11 relative accuracy up to here
_FACTORIAL_D_MAX = 4  # factorial-sum small-d loses unitarity past ~1e-14 above here

_TWO_PI = 2.0 * np.pi

# log(n!) for n = 0 .. 3*LMAX_SUPPORTED + 1
_LOGFACT = np.array([math.lgamma(n + 1.0) for n in range(3 * LMAX_SUPPORTED + 2)])


def _check_degree(*ls: int) -> None:
    for l in ls:
        if int(l) != l or l < 0:
            raise ValueError(f"degree must be a nonnegative integer, got {l!r}")
        if l > LMAX_SUPPORTED:
            raise ValueError(f"degree {l} exceeds supported maximum {LMAX_SUPPORTED}")


def _check_order(l: int, m: int) -> None:
    if int(m) != m or abs(m) > l:
        raise ValueError(f"order {m!r} invalid for degree {l}")


def _triangle(l1: int, l2: int, l3: int) -> bool:
    return abs(l1 - l2) <= l3 <= l1 + l2


# ---------------------------------------------------------------------------
# 3j symbols
# ---------------------------------------------------------------------------

def _racah(l1: int, l2: int, l3: int, m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Racah single sum for 3j(l1 l2 l3; m1 m2 -m1-m2), vectorized over (m1, m2).

    Assumes the triangle condition; entries with |m3| > l3 come back as 0.
    """
    m1 = np.asarray(m1, dtype=np.int64)
    m2 = np.asarray(m2, dtype=np.int64)
    m1, m2 = np.broadcast_arrays(m1, m2)
    m3 = -m1 - m2
    valid = (np.abs(m1) <= l1) & (np.abs(m2) <= l2) & (np.abs(m3) <= l3)
    m1v = np.where(valid, m1, 0)
    m2v = np.where(valid, m2, 0)
    m3v = np.where(valid, m3, 0)
    lf = _LOGFACT
    pref = 0.5 * (
        lf[l1 + l2 - l3] + lf[l1 - l2 + l3] + lf[-l1 + l2 + l3] - lf[l1 + l2 + l3 + 1]
        + lf[l1 + m1v] + lf[l1 - m1v] + lf[l2 + m2v] + lf[l2 - m2v] + lf[l3 + m3v] + lf[l3 - m3v]
    )
    kmin = np.maximum.reduce([np.zeros_like(m1v), l2 - l3 - m1v, l1 - l3 + m2v])
    kmax = np.minimum.reduce([np.full_like(m1v, l1 + l2 - l3), l1 - m1v, l2 + m2v])
    total = np.zeros(m1v.shape)
    comp = np.zeros(m1v.shape)
    for k in range(0, l1 + l2 - l3 + 1):
        live = valid & (k >= kmin) & (k <= kmax)
        if not live.any():
            continue
        a = np.where(live, l3 - l2 + k + m1v, 0)
        b = np.where(live, l3 - l1 + k - m2v, 0)
        c = np.where(live, l1 - k - m1v, 0)
        d = np.where(live, l2 - k + m2v, 0)
        logt = pref - (lf[k] + lf[a] + lf[b] + lf[l1 + l2 - l3 - k] + lf[c] + lf[d])
        term = np.where(live, np.exp(logt), 0.0)
        if k % 2:
            term = -term
        # Neumaier compensated accumulation
        t = total + term
        big = np.abs(total) >= np.abs(term)
        comp += np.where(big, (total - t) + term, (term - t) + total)
        total = t
    out = total + comp
    sign = np.where((l1 - l2 - m3v) % 2 == 0, 1.0, -1.0)
    return np.where(valid, sign * out, 0.0)


def _racah_exact(l1: int, l2: int, l3: int, m1: int, m2: int) -> float:
    """Racah sum in binomial form, accumulated in exact integers.

    ``3j^2 = S^2 prod(l +- m)! / (A! B! C! (J+1)!)`` is rational, so a single
    correctly rounded division followed by ``sqrt`` gives ~1 ulp accuracy.
    """
    m3 = -m1 - m2
    a, b, c = l1 + l2 - l3, l1 - l2 + l3, -l1 + l2 + l3
    s = 0
    for k in range(max(0, l1 - m1 - b, l2 + m2 - c), min(a, l1 - m1, l2 + m2) + 1):
        t = math.comb(a, k) * math.comb(b, l1 - m1 - k) * math.comb(c, l2 + m2 - k)
        s += -t if k % 2 else t
    if s == 0:
        return 0.0
    num = s * s
    for v in (l1 + m1, l1 - m1, l2 + m2, l2 - m2, l3 + m3, l3 - m3):
        num *= math.factorial(v)
    den = math.factorial(a) * math.factorial(b) * math.factorial(c) * math.factorial(l1 + l2 + l3 + 1)
    mag = math.sqrt(num / den)
    neg = ((l1 - l2 - m3) % 2 == 1) != (s < 0)
    return -mag if neg else mag


def wigner_3j(l1: int, l2: int, l3: int, m1: int, m2: int, m3: int) -> float:
    """Wigner 3j symbol (l1 l2 l3; m1 m2 m3).

    Returns exactly ``0.0`` when ``m1+m2+m3 != 0`` or the triangle inequality
    fails. Raises ``ValueError`` for negative degrees or ``|m| > l``.
    """
    _check_degree(l1, l2, l3)
    _check_order(l1, m1)
    _check_order(l2, m2)
    _check_order(l3, m3)
    if m1 + m2 + m3 != 0 or not _triangle(l1, l2, l3):
        return 0.0
    if m1 == m2 == m3 == 0 and (l1 + l2 + l3) % 2:
        return 0.0
    return _racah_exact(int(l1), int(l2), int(l3), int(m1), int(m2))


@lru_cache(maxsize=4096)
def _table_cached(l1: int, l2: int, l3: int) -> np.ndarray:
    m1 = np.arange(-l1, l1 + 1)[:, None]
    m2 = np.arange(-l2, l2 + 1)[None, :]
    if not _triangle(l1, l2, l3):
        tab = np.zeros((2 * l1 + 1, 2 * l2 + 1))
    elif max(l1, l2, l3) <= _FLOAT_3J_MAX:
        tab = _racah(l1, l2, l3, m1, m2)
    else:
        tab = np.zeros((2 * l1 + 1, 2 * l2 + 1))
        for i in range(2 * l1 + 1):
            for j in range(2 * l2 + 1):
                if abs(i - l1 + j - l2) <= l3:
                    tab[i, j] = _racah_exact(l1, l2, l3, i - l1, j - l2)
    if (l1 + l2 + l3) % 2:
        tab[l1, l2] = 0.0
    tab.setflags(write=False)
    return tab


def wigner_3j_table(l1: int, l2: int, l3: int) -> np.ndarray:
    """All symbols 3j(l1 l2 l3; m1 m2 -m1-m2) as a read-only array.

    Entry ``[m1 + l1, m2 + l2]``; zero where ``|m1 + m2| > l3`` or the triangle fails.
    """
    _check_degree(l1, l2, l3)
    return _table_cached(int(l1), int(l2), int(l3))


def wigner_3j_zero(l1: int, l2: int, l3: int) -> float:
    """Closed form of 3j(l1 l2 l3; 0 0 0).

    For even ``L = l1+l2+l3`` this is
    ``(-1)^(L/2) sqrt(prod (L-2lj)! / (L+1)!) (L/2)! / prod (L/2-lj)!``, else 0.
    """
    _check_degree(l1, l2, l3)
    if not _triangle(l1, l2, l3):
        raise ValueError(f"triangle inequality violated by ({l1}, {l2}, {l3})")
    big_l = l1 + l2 + l3
    if big_l % 2:
        return 0.0
    h = big_l // 2
    lf = _LOGFACT
    logv = 0.5 * (lf[big_l - 2 * l1] + lf[big_l - 2 * l2] + lf[big_l - 2 * l3] - lf[big_l + 1])
    logv += lf[h] - lf[h - l1] - lf[h - l2] - lf[h - l3]
    return (-1.0) ** h * math.exp(logv)


def clebsch_gordan(l1: int, k1: int, l2: int, k2: int, l: int, k: int) -> float:
    """Clebsch-Gordan coefficient <l1 k1; l2 k2 | l k>."""
    _check_degree(l1, l2, l)
    _check_order(l1, k1)
    _check_order(l2, k2)
    _check_order(l, k)
    if k1 + k2 != k:
        return 0.0
    sign = -1.0 if (l1 - l2 + k) % 2 else 1.0
    return sign * math.sqrt(2 * l + 1) * wigner_3j(l1, l2, l, k1, k2, -k)


def gaunt(l1: int, m1: int, l2: int, m2: int, l3: int, m3: int) -> float:
    """Integral of Y_{l1}^{m1} Y_{l2}^{m2} Y_{l3}^{m3} over the unit sphere."""
    _check_degree(l1, l2, l3)
    _check_order(l1, m1)
    _check_order(l2, m2)
    _check_order(l3, m3)
    if m1 + m2 + m3 != 0 or not _triangle(l1, l2, l3) or (l1 + l2 + l3) % 2:
        return 0.0
    norm = math.sqrt((2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1) / (4.0 * math.pi))
    return norm * wigner_3j_zero(l1, l2, l3) * wigner_3j(l1, l2, l3, m1, m2, m3)


# ---------------------------------------------------------------------------
# Rotations
# ---------------------------------------------------------------------------

def _rz(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _ry(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


@dataclass(frozen=True)
class Rotation:
    """Element of SO(3) in z-y-z Euler angles.

    ``phi`` and ``gamma`` are wrapped into [0, 2pi); ``theta`` must lie in [0, pi].
    """

    phi: float
    theta: float
    gamma: float

    def __post_init__(self) -> None:
        theta = float(self.theta)
        if not (-1e-12 <= theta <= math.pi + 1e-12) or not math.isfinite(theta):
            raise ValueError(f"theta must lie in [0, pi], got {self.theta!r}")
        object.__setattr__(self, "theta", min(max(theta, 0.0), math.pi))
        for name in ("phi", "gamma"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            v = math.fmod(v, _TWO_PI)
            if v < 0.0:
                v += _TWO_PI
            if v >= _TWO_PI:
                v = 0.0
            object.__setattr__(self, name, v)

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(0.0, 0.0, 0.0)

    def matrix(self) -> np.ndarray:
        return _rz(self.phi) @ _ry(self.theta) @ _rz(self.gamma)

    @classmethod
    def from_matrix(cls, r: np.ndarray) -> "Rotation":
        r = np.asarray(r, dtype=float)
        st = math.hypot(r[0, 2], r[1, 2])
        theta = math.atan2(st, r[2, 2])
        if st > 1e-12:
            phi = math.atan2(r[1, 2], r[0, 2])
            gamma = math.atan2(r[2, 1], -r[2, 0])
        elif r[2, 2] > 0:
            theta, gamma = 0.0, 0.0
            phi = math.atan2(r[1, 0], r[0, 0])
        else:
            theta, gamma = math.pi, 0.0
            phi = math.atan2(-r[1, 0], r[1, 1])
        return cls(phi, theta, gamma)

    def compose(self, other: "Rotation") -> "Rotation":
        """The rotation ``self o other`` (apply ``other`` first)."""
        return Rotation.from_matrix(self.matrix() @ other.matrix())

    def inverse(self) -> "Rotation":
        return Rotation.from_matrix(self.matrix().T)


@dataclass(frozen=True)
class WignerDBlock:
    """Degree-l representation matrix; ``entries[m + l, k + l] = D^l_{m,k}``."""

    degree: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        n = 2 * self.degree + 1
        if self.entries.shape != (n, n):
            raise ValueError("entries must be (2l+1) x (2l+1)")
        self.entries.setflags(write=False)

    def __getitem__(self, mk: tuple[int, int]) -> complex:
        m, k = mk
        return complex(self.entries[m + self.degree, k + self.degree])


# ---------------------------------------------------------------------------
# Wigner d and D
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _d_terms(l: int):
    """Coefficients and exponents of the factorial sum for d^l_{m',m}."""
    n = 2 * l + 1
    ns = 2 * l + 1
    coef = np.zeros((n, n, ns))
    pc = np.zeros((n, n, ns), dtype=np.int64)
    ps = np.zeros((n, n, ns), dtype=np.int64)
    lf = _LOGFACT
    for i, mp in enumerate(range(-l, l + 1)):
        for j, m in enumerate(range(-l, l + 1)):
            half = 0.5 * (lf[l + mp] + lf[l - mp] + lf[l + m] + lf[l - m])
            for s in range(max(0, m - mp), min(l + m, l - mp) + 1):
                logc = half - (lf[l + m - s] + lf[s] + lf[mp - m + s] + lf[l - mp - s])
                sign = -1.0 if (mp - m + s) % 2 else 1.0
                coef[i, j, s] = sign * math.exp(logc)
                pc[i, j, s] = 2 * l + m - mp - 2 * s
                ps[i, j, s] = mp - m + 2 * s
    for a in (coef, pc, ps):
        a.setflags(write=False)
    return coef, pc, ps


@lru_cache(maxsize=None)
def _jy_eigen(l: int):
    """Eigenpairs of the Hermitian generator whose exponential is d^l."""
    n = 2 * l + 1
    a = np.zeros((n, n))
    for i, m in enumerate(range(-l, l)):
        v = 0.5 * math.sqrt((l - m) * (l + m + 1))
        a[i + 1, i] = -v
        a[i, i + 1] = v
    lam, vec = np.linalg.eigh(1j * a)
    lam = np.rint(lam)  # spectrum is exactly -l..l
    vec.setflags(write=False)
    return lam, vec


def _small_d(l: int, theta) -> np.ndarray:
    """d^l(theta) for scalar or array theta; no range check.

    Output shape ``theta.shape + (2l+1, 2l+1)`` with rows m', columns m.
    Factorial sum for small degrees, ``V exp(-i theta Lambda) V^H`` above.
    """
    th = np.asarray(theta, dtype=float)
    if l > _FACTORIAL_D_MAX:
        lam, vec = _jy_eigen(l)
        ph = np.exp(-1j * np.multiply.outer(th, lam))[..., None, :]
        return np.matmul(vec * ph, vec.conj().T).real
    return _small_d_factorial(l, th)


def _small_d_factorial(l: int, th: np.ndarray) -> np.ndarray:
    coef, pc, ps = _d_terms(l)
    c = np.cos(0.5 * th)[..., None, None, None]
    s = np.sin(0.5 * th)[..., None, None, None]
    terms = coef * c ** pc * s ** ps
    return terms.sum(axis=-1)


def wigner_d(l: int, theta: float) -> np.ndarray:
    """Real small-d matrix; ``out[m + l, k + l] = d^l_{m,k}(theta)``, theta in [0, pi]."""
    _check_degree(l)
    if not (0.0 <= theta <= math.pi):
        raise ValueError(f"theta must lie in [0, pi], got {theta!r}")
    return _small_d(int(l), float(theta))


def _phase(l: int, angle) -> np.ndarray:
    m = np.arange(-l, l + 1)
    return np.exp(-1j * np.multiply.outer(np.asarray(angle, dtype=float), m))


def wigner_D(l: int, g: Rotation) -> WignerDBlock:
    """Wigner D block of degree ``l`` for rotation ``g``."""
    _check_degree(l)
    if not isinstance(g, Rotation):
        raise TypeError("g must be a Rotation")
    d = _small_d(int(l), g.theta)
    mat = _phase(l, g.phi)[:, None] * d * _phase(l, g.gamma)[None, :]
    return WignerDBlock(int(l), np.ascontiguousarray(mat))


def wigner_D_stack(l: int, phi, theta, gamma) -> np.ndarray:
    """D^l for arrays of Euler angles; shape ``(n, 2l+1, 2l+1)``."""
    _check_degree(l)
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    d = _small_d(int(l), theta)
    return _phase(l, phi)[:, :, None] * d * _phase(l, gamma)[:, None, :]


def rotate_coefficients(c, g: Rotation):
    """Coefficients of the rotated field ``X(g^-1 L)``: block-wise ``D^l(g) Z_l``."""
    from .harmonics import HarmonicCoeffs

    blocks = [wigner_D(l, g).entries @ c.block(l) for l in range(c.lmax + 1)]
    return HarmonicCoeffs.from_blocks(blocks)


def sample_haar_rotation(rng: np.random.Generator) -> Rotation:
    """Haar-distributed rotation: phi, gamma uniform, cos(theta) uniform on [-1, 1]."""
    phi = rng.uniform(0.0, _TWO_PI)
    cos_t = rng.uniform(-1.0, 1.0)
    gamma = rng.uniform(0.0, _TWO_PI)
    return Rotation(phi, math.acos(cos_t), gamma)


# ---------------------------------------------------------------------------
# SO(3) quadrature
# ---------------------------------------------------------------------------

def _resolution(resolution, lmax) -> tuple[int, int, int]:
    if resolution is None:
        if lmax is None:
            raise ValueError("give either resolution or lmax")
        return (lmax + 1, 2 * lmax + 2, 2 * lmax + 2)
    if isinstance(resolution, (int, np.integer)):
        resolution = (resolution, resolution, resolution)
    res = tuple(int(r) for r in resolution)
    if len(res) != 3 or min(res) < 1:
        raise ValueError(f"resolution needs three positive sizes, got {resolution!r}")
    return res


def so3_quadrature(resolution: Sequence[int] | int | None = None, lmax: int | None = None):
    """Nodes and weights for the normalized Haar integral.

    Gauss-Legendre in cos(theta), trapezoid in phi and gamma. Returns flat arrays
    ``(phi, theta, gamma, weights)`` with ``weights.sum() == 1``.
    """
    nt, nphi, ngam = _resolution(resolution, lmax)
    x, w = np.polynomial.legendre.leggauss(nt)
    theta = np.arccos(x)
    phi = _TWO_PI * np.arange(nphi) / nphi
    gam = _TWO_PI * np.arange(ngam) / ngam
    P, T, G = np.meshgrid(phi, theta, gam, indexing="ij")
    W = np.broadcast_to((w / 2.0)[None, :, None] / (nphi * ngam), P.shape)
    return P.ravel(), T.ravel(), G.ravel(), W.ravel().copy()


def so3_integral(
    f: Callable,
    resolution: Sequence[int] | int | None = None,
    lmax: int | None = None,
    vectorized: bool = False,
) -> complex:
    """Normalized Haar integral of ``f`` over SO(3).

    ``f`` takes a :class:`Rotation`, or arrays ``(phi, theta, gamma)`` when
    ``vectorized``. Exact for trigonometric polynomials of degree <= ``lmax`` in
    each angle when the default resolution for ``lmax`` is used.
    """
    phi, theta, gamma, w = so3_quadrature(resolution, lmax)
    if vectorized:
        vals = np.asarray(f(phi, theta, gamma))
    else:
        vals = np.array([f(Rotation(a, b, c)) for a, b, c in zip(phi, theta, gamma)])
    return complex(np.sum(w * vals))
