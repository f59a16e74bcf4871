"""Half-integer order Bessel functions via spherical Bessel recurrences.

Only orders l + 1/2 are needed, so everything reduces to the spherical
functions j_l and i_l:

    J_{l+1/2}(x) = sqrt(2x/pi) j_l(x),    I_{l+1/2}(x) = sqrt(2x/pi) i_l(x).
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["spherical_jn_all", "spherical_in_ratio", "bessel_j_half", "modified_i_half_ratio"]

_SMALL_X = 1e-3
_RESCALE = 1e100


def _miller_start(lmax: int, x: float) -> int:
    # start well above both lmax and x so the minimal solution dominates
    n = max(lmax, int(math.ceil(x)))
    return n + 20 + int(math.sqrt(40.0 * (n + 1)))


def _jn_series(lmax: int, x: np.ndarray) -> np.ndarray:
    out = np.empty((lmax + 1, x.size))
    dfact = 1.0
    for l in range(lmax + 1):
        dfact *= 2 * l + 1
        # two-term Taylor series; error O(x^4) relative, below 1e-13 for x < 1e-3
        out[l] = x**l / dfact * (1.0 - x * x / (2.0 * (2 * l + 3)))
    return out


def _jn_upward(lmax: int, x: np.ndarray) -> np.ndarray:
    out = np.empty((lmax + 1, x.size))
    s, c = np.sin(x), np.cos(x)
    out[0] = s / x
    if lmax >= 1:
        out[1] = s / (x * x) - c / x
    for l in range(1, lmax):
        out[l + 1] = (2 * l + 1) / x * out[l] - out[l - 1]
    return out


def _jn_downward(lmax: int, x: np.ndarray) -> np.ndarray:
    n0 = _miller_start(lmax, float(x.max()))
    out = np.zeros((lmax + 1, x.size))
    hi = np.zeros_like(x)
    cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    for l in range(n0, 0, -1):
        lo = (2 * l + 1) / x * cur - hi
        hi, cur = cur, lo
        # cur now holds the unnormalized j_{l-1}
        k = l - 1
        norm += (2 * k + 1) * cur * cur
        if k <= lmax:
            out[k] = cur
        big = np.abs(cur) > _RESCALE
        if np.any(big):
            scale = np.where(big, 1.0 / _RESCALE, 1.0)
            cur, hi, out, norm = cur * scale, hi * scale, out * scale, norm * scale * scale
    # the Neumann sum rule sum (2l+1) j_l^2 = 1 fixes magnitude; j_0 or j_1 fixes the sign
    out /= np.sqrt(norm)
    j0 = np.sin(x) / x
    ref = np.where(np.abs(j0) > 0.1, j0, np.sin(x) / x**2 - np.cos(x) / x)
    got = np.where(np.abs(j0) > 0.1, out[0], out[1] if lmax >= 1 else out[0])
    if lmax == 0:
        # sum rule alone is exact only with all orders; use j_0 directly
        out[0] = j0
        return out
    return out * np.sign(ref * got)


def spherical_jn_all(lmax: int, x) -> np.ndarray:
    """Spherical Bessel ``j_0(x) .. j_lmax(x)`` for ``x >= 0``; shape ``(lmax+1,) + x.shape``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("argument must be finite and nonnegative")
    flat = x.ravel()
    out = np.empty((lmax + 1, flat.size))
    small = flat < _SMALL_X
    up = (~small) & (flat > max(lmax, 1))
    down = ~(small | up)
    if small.any():
        out[:, small] = _jn_series(lmax, flat[small])
    if up.any():
        out[:, up] = _jn_upward(lmax, flat[up])
    if down.any():
        out[:, down] = _jn_downward(lmax, flat[down])
    return out.reshape((lmax + 1,) + x.shape)


def bessel_j_half(l: int, x) -> np.ndarray:
    """``J_{l+1/2}(x)`` for ``x >= 0``."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(2.0 * x / math.pi) * spherical_jn_all(l, x)[l]


def spherical_in_ratio(lmax: int, x: float) -> np.ndarray:
    """``i_l(x) / i_0(x)`` for ``l = 0..lmax`` (modified spherical Bessel, first kind).

    Downward recurrence ``i_{l-1} = i_{l+1} + (2l+1)/x i_l`` is stable for the
    decaying solution; dividing by the computed ``i_0`` removes the unknown scale.
    """
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise ValueError("argument must be positive and finite")
    n0 = _miller_start(lmax, x)
    vals = np.zeros(lmax + 1)
    hi, cur = 0.0, 1e-30
    for l in range(n0, 0, -1):
        hi, cur = cur, hi + (2 * l + 1) / x * cur
        if l - 1 <= lmax:
            vals[l - 1] = cur
        if cur > _RESCALE:
            hi, cur, vals = hi / _RESCALE, cur / _RESCALE, vals / _RESCALE
    return vals / vals[0]


def modified_i_half_ratio(lmax: int, x: float) -> np.ndarray:
    """``I_{l+1/2}(x) / I_{1/2}(x)`` for ``l = 0..lmax``."""
    return spherical_in_ratio(lmax, x)
