"""Angular polyspectra of isotropic fields and their relation to coefficient cumulants.

Coupling weights
----------------
For sorted degrees ``l_1 <= ... <= l_p`` and diagonal degrees ``L_1 .. L_{p-3}``
the coupling weight of an order tuple ``m`` is

    W(m) = prod_a sqrt(2 L_a + 1) * (-1)^(s_1 + ... + s_{p-3})
           * prod_{a=0}^{p-3} 3j(L_a, l_{a+2}, L_{a+1}; s_a, m_{a+2}, -s_{a+1})

with partial sums ``s_a = m_1 + ... + m_{a+1}``, ``L_0 = l_1`` and
``L_{p-2} = l_p``. For ``p = 3`` this is the 3j symbol itself. The weights of all
admissible diagonals form an orthonormal system over ``m``, so an isotropic
cumulant table decomposes as ``Cum(m) = sum_L W_L(m) S(L)`` and
``S(L) = sum_m W_L(m) Cum(m)``.

Repeated degrees make a coupling non-canonical: swapping tied slots maps one
diagonal system onto another. The forward map therefore uses ``W`` averaged over
the permutations of tied slots. The backward map is unchanged for symmetric
inputs, and ``backward(forward(S))`` is an orthogonal projection of ``S``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .cumulants import partition_coefficient, partitions
from .harmonics import AngularPowerSpectrum, HarmonicCoeffs, spherical_harmonic
from .wigner import wigner_3j_table

__all__ = [
    "PolySpectrum",
    "CoeffEnsemble",
    "Key",
    "diagonals",
    "principal_domain",
    "coupling_tensor",
    "coupling_stack",
    "polyspectrum_from_cumulants",
    "cumulants_from_polyspectrum",
    "power_spectrum_estimate",
    "polyspectrum_estimate",
    "bicoherence",
    "bicovariance_kernel",
    "bicovariance_series",
    "invariant_I2",
    "invariant_I3",
    "SUPPORTED_ORDERS",
]

SUPPORTED_ORDERS = (3, 4, 5)
STRUCTURAL_TOL = 1e-12

Key = tuple  # (degrees tuple, diagonal tuple)


def _admissible(a: int, b: int, c: int) -> bool:
    return abs(a - b) <= c <= a + b


def diagonals(ls: Sequence[int]) -> list[tuple[int, ...]]:
    """All diagonal tuples ``(L_1..L_{p-3})`` whose consecutive triangles are admissible."""
    ls = tuple(int(l) for l in ls)
    p = len(ls)
    if p < 3:
        raise ValueError("need at least three degrees")
    out = []

    def grow(prefix: tuple[int, ...]):
        a = len(prefix)  # the next triangle is (L_a, l_{a+2}, L_{a+1})
        prev = ls[0] if a == 0 else prefix[-1]
        if a == p - 3:
            if _admissible(prev, ls[p - 2], ls[p - 1]):
                out.append(prefix)
            return
        nxt = ls[a + 1]
        for L in range(abs(prev - nxt), prev + nxt + 1):
            grow(prefix + (L,))

    grow(())
    return out


def _check_order(p: int) -> int:
    if p not in SUPPORTED_ORDERS:
        raise ValueError(f"order p must be one of {SUPPORTED_ORDERS}, got {p}")
    return int(p)


def principal_domain(p: int, lmax: int) -> list[Key]:
    """Admissible ``(degrees, diagonals)`` keys with sorted degrees and even degree sum."""
    _check_order(p)
    if int(lmax) != lmax or lmax < 0:
        raise ValueError("lmax must be a nonnegative integer")
    keys = []
    for ls in itertools.combinations_with_replacement(range(int(lmax) + 1), p):
        if sum(ls) % 2:
            continue
        for d in diagonals(ls):
            keys.append((ls, d))
    return keys


def _validate_key(p: int, key) -> Key:
    ls, d = key
    ls = tuple(int(l) for l in ls)
    d = tuple(int(x) for x in d)
    if len(ls) != p or len(d) != p - 3:
        raise ValueError(f"key {key} does not match order {p}")
    if any(l < 0 for l in ls) or list(ls) != sorted(ls):
        raise ValueError(f"degrees must be sorted and nonnegative: {ls}")
    if sum(ls) % 2:
        raise ValueError(f"degree sum must be even: {ls}")
    if d not in diagonals(ls):
        raise ValueError(f"diagonal {d} is not admissible for degrees {ls}")
    return (ls, d)


# ---------------------------------------------------------------------------
# Coupling weights
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4096)
def _step_kernel(c_in: int, l: int, c_out: int, signed: bool) -> np.ndarray:
    """K[s, m, s'] = (-1)^s? 3j(c_in, l, c_out; s, m, -s') on s' = s + m."""
    tab = wigner_3j_table(c_in, l, c_out)
    K = np.zeros((2 * c_in + 1, 2 * l + 1, 2 * c_out + 1))
    s = np.arange(-c_in, c_in + 1)[:, None]
    m = np.arange(-l, l + 1)[None, :]
    sp = s + m
    ok = np.abs(sp) <= c_out
    si, mi = np.nonzero(ok)
    K[si, mi, (sp + c_out)[ok]] = tab[si, mi]
    if signed:
        K *= ((-1.0) ** np.arange(-c_in, c_in + 1))[:, None, None]
    K.setflags(write=False)
    return K


def _chain(ls: tuple[int, ...], diag: tuple[int, ...]) -> list[np.ndarray]:
    p = len(ls)
    ch = (ls[0],) + diag + (ls[-1],)
    return [_step_kernel(ch[a], ls[a + 1], ch[a + 1], a >= 1) for a in range(p - 2)]


def _prefactor(diag: tuple[int, ...]) -> float:
    return float(np.prod([math.sqrt(2 * L + 1) for L in diag])) if diag else 1.0


@lru_cache(maxsize=512)
def coupling_tensor(ls: tuple[int, ...], diag: tuple[int, ...] = ()) -> np.ndarray:
    """Dense weight ``W[m_1 + l_1, ..., m_p + l_p]`` for one coupling (not symmetrized)."""
    ls = tuple(int(l) for l in ls)
    diag = tuple(int(x) for x in diag)
    X = np.eye(2 * ls[0] + 1)
    for K in _chain(ls, diag):
        X = np.tensordot(X, K, axes=([-1], [0]))
    # last axis holds s_{p-2} = -m_p
    W = X[..., ::-1] * _prefactor(diag)
    W.setflags(write=False)
    return W


def _tie_permutations(ls: tuple[int, ...]) -> list[tuple[int, ...]]:
    p = len(ls)
    return [s for s in itertools.permutations(range(p)) if all(ls[s[i]] == ls[i] for i in range(p))]


@lru_cache(maxsize=64)
def coupling_stack(ls: tuple[int, ...], symmetrize: bool = True) -> tuple[tuple[tuple[int, ...], ...], np.ndarray]:
    """All diagonals of ``ls`` and the stacked weights, shape ``(D,) + (2l_i+1, ...)``."""
    ls = tuple(int(l) for l in ls)
    diags = tuple(diagonals(ls))
    if not diags:
        return diags, np.zeros((0,) + tuple(2 * l + 1 for l in ls))
    W = np.stack([coupling_tensor(ls, d) for d in diags])
    if symmetrize:
        perms = _tie_permutations(ls)
        if len(perms) > 1:
            W = sum(np.transpose(W, (0,) + tuple(1 + s for s in sg)) for sg in perms) / len(perms)
    W.setflags(write=False)
    return diags, W


# ---------------------------------------------------------------------------
# PolySpectrum container
# ---------------------------------------------------------------------------

@dataclass
class PolySpectrum:
    """Table of ``S_p(l_1..l_p | L_1..L_{p-3})`` on principal-domain keys.

    ``se`` carries standard errors when the table is an estimate. ``structural``
    lists keys whose value is zero for every isotropic field (the symmetrized
    coupling weight vanishes).
    """

    p: int
    entries: dict = field(default_factory=dict)
    se: dict = field(default_factory=dict)
    structural: set = field(default_factory=set)
    imag_residue: float = 0.0

    def __post_init__(self):
        _check_order(self.p)
        self.entries = {_validate_key(self.p, k): float(v) for k, v in self.entries.items()}
        self.se = {_validate_key(self.p, k): float(v) for k, v in self.se.items()}
        self.structural = {_validate_key(self.p, k) for k in self.structural}

    def __getitem__(self, key) -> float:
        ls, d = key
        return self.entries.get((tuple(ls), tuple(d)), 0.0)

    def value(self, ls: Sequence[int], diag: Sequence[int] = ()) -> float:
        """Look up a value; for p = 3 the degrees may be given in any order."""
        ls = tuple(ls)
        if self.p == 3:
            ls = tuple(sorted(ls))
        return self[(ls, tuple(diag))]

    def keys(self):
        return self.entries.keys()

    def items(self):
        return self.entries.items()

    def __len__(self) -> int:
        return len(self.entries)

    def to_dict(self) -> dict:
        rows = []
        for (ls, d), v in sorted(self.entries.items()):
            row = {"l": list(ls), "diag": list(d), "value": v}
            if (ls, d) in self.se:
                row["se"] = self.se[(ls, d)]
            if (ls, d) in self.structural:
                row["structural"] = True
            rows.append(row)
        return {"p": self.p, "entries": rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: Mapping) -> "PolySpectrum":
        p = int(d["p"])
        entries, se, structural = {}, {}, set()
        for row in d["entries"]:
            key = (tuple(row["l"]), tuple(row.get("diag", ())))
            entries[key] = row["value"]
            if "se" in row:
                se[key] = row["se"]
            if row.get("structural"):
                structural.add(key)
        return cls(p, entries, se, structural)

    @classmethod
    def from_json(cls, text: str) -> "PolySpectrum":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Maps between cumulants and polyspectra
# ---------------------------------------------------------------------------

def _zero_sum_orders(ls: Sequence[int]) -> Iterable[tuple[int, ...]]:
    head = [range(-l, l + 1) for l in ls[:-1]]
    last = ls[-1]
    for ms in itertools.product(*head):
        mp = -sum(ms)
        if abs(mp) <= last:
            yield tuple(ms) + (mp,)


def polyspectrum_from_cumulants(
    p: int,
    cum: Callable[[tuple[int, ...], tuple[int, ...]], complex],
    lmax: int,
) -> PolySpectrum:
    """``S(key) = sum_m W_key(m) cum(l, m)`` over zero-sum order tuples, for every key.

    The largest imaginary part discarded is stored in ``imag_residue``.
    """
    _check_order(p)
    entries = {}
    resid = 0.0
    by_degrees: dict[tuple, list] = {}
    for ls, d in principal_domain(p, lmax):
        by_degrees.setdefault(ls, []).append(d)
    for ls in by_degrees:
        diags, W = coupling_stack(ls)
        C = np.zeros(W.shape[1:], complex)
        for ms in _zero_sum_orders(ls):
            C[tuple(m + l for m, l in zip(ms, ls))] = cum(ls, ms)
        S = W.reshape(len(diags), -1) @ C.ravel()
        resid = max(resid, float(np.abs(S.imag).max(initial=0.0)))
        for d, v in zip(diags, S.real):
            entries[(ls, d)] = float(v)
    return PolySpectrum(p, entries, imag_residue=resid)


def cumulants_from_polyspectrum(
    p: int,
    S: PolySpectrum,
    degrees: Sequence[int],
    orders: Sequence[int],
) -> float:
    """Cumulant of ``Z_{l_1}^{m_1} .. Z_{l_p}^{m_p}`` implied by an isotropic polyspectrum.

    The ``(l, m)`` pairs are sorted first, so the result is exactly invariant under
    simultaneous permutations of degrees and orders.
    """
    _check_order(p)
    if S.p != p:
        raise ValueError(f"spectrum has order {S.p}, expected {p}")
    if len(degrees) != p or len(orders) != p:
        raise ValueError(f"need {p} degrees and {p} orders")
    pairs = sorted((int(l), int(m)) for l, m in zip(degrees, orders))
    if any(l < 0 or abs(m) > l for l, m in pairs):
        raise ValueError(f"invalid (degree, order) pairs {pairs}")
    ls = tuple(l for l, _ in pairs)
    ms = tuple(m for _, m in pairs)
    if sum(ms) != 0 or sum(ls) % 2:
        return 0.0
    diags, W = coupling_stack(ls)
    idx = (slice(None),) + tuple(m + l for m, l in zip(ms, ls))
    w = W[idx]
    vals = np.array([S[(ls, d)] for d in diags])
    return float(w @ vals) if len(diags) else 0.0


# ---------------------------------------------------------------------------
# Ensembles and estimators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoeffEnsemble:
    """Independent replicates of a coefficient array with a common band limit."""

    replicates: tuple
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        reps = tuple(self.replicates)
        if not reps:
            raise ValueError("ensemble needs at least one replicate")
        if any(not isinstance(r, HarmonicCoeffs) for r in reps):
            raise TypeError("replicates must be HarmonicCoeffs")
        if len({r.lmax for r in reps}) != 1:
            raise ValueError("replicates must share lmax")
        object.__setattr__(self, "replicates", reps)
        object.__setattr__(self, "_cache", {})

    @property
    def lmax(self) -> int:
        return self.replicates[0].lmax

    def __len__(self) -> int:
        return len(self.replicates)

    def stacked(self) -> np.ndarray:
        """Array ``z[n, l, m]`` for ``m >= 0``."""
        if "z" not in self._cache:
            self._cache["z"] = np.stack([r.z for r in self.replicates])
        return self._cache["z"]

    def blocks(self, l: int) -> np.ndarray:
        """``N x (2l+1)`` matrix of ``Z_l^m``, ``m = -l..l``."""
        key = ("b", l)
        if key not in self._cache:
            pos = self.stacked()[:, l, : l + 1]
            m = np.arange(1, l + 1)
            neg = ((-1.0) ** m * np.conj(pos[:, 1:]))[:, ::-1]
            self._cache[key] = np.concatenate([neg, pos], axis=1)
        return self._cache[key]


def power_spectrum_estimate(e: CoeffEnsemble) -> AngularPowerSpectrum:
    """``f_l = mean_n sum_m |Z_l^m|^2 / (2l+1)``."""
    z = e.stacked()
    a = np.abs(z) ** 2
    power = a[:, :, 0] + 2.0 * a[:, :, 1:].sum(axis=2)
    return AngularPowerSpectrum(power.mean(axis=0) / (2 * np.arange(e.lmax + 1) + 1))


def _full_product(ls, diags, Y: list[np.ndarray]) -> np.ndarray:
    """Per-replicate ``sum_m W_d(m) prod_i Y_i[n, m_i]`` for every diagonal, shape ``(D, N)``."""
    n = Y[0].shape[0]
    out = np.empty((len(diags), n), complex)
    for k, d in enumerate(diags):
        v = Y[0]
        for K, y in zip(_chain(ls, d), Y[1:-1]):
            o = (v[:, :, None] * y[:, None, :]).reshape(n, -1)
            v = o @ K.reshape(-1, K.shape[2])
        out[k] = _prefactor(d) * np.einsum("ns,ns->n", v, Y[-1][:, ::-1])
    return out


def _block_moment(Y: list[np.ndarray], block: tuple[int, ...]) -> np.ndarray:
    n = Y[0].shape[0]
    o = Y[block[0]]
    for j in block[1:-1]:
        o = (o[:, :, None] * Y[j][:, None, :]).reshape(n, -1)
    M = o.T @ Y[block[-1]] / n
    return M.reshape(tuple(Y[j].shape[1] for j in block))


_LETTERS = "abcdefgh"


def _estimate_degrees(ls, W, diags, Y):
    """Plug-in estimate and leave-one-out replicates for all diagonals of one degree tuple."""
    p = len(ls)
    n = Y[0].shape[0]
    alpha = n / (n - 1.0)
    beta = -1.0 / (n - 1.0)
    t = _full_product(ls, diags, Y)  # (D, N)
    est = np.zeros(len(diags), complex)
    loo = np.zeros((len(diags), n), complex)
    moments: dict[tuple, np.ndarray] = {}
    wsub = "z" + _LETTERS[:p]
    for part in partitions(p):
        c = partition_coefficient(len(part))
        blocks = part.blocks
        singles = [b for b in blocks if len(b) == 1]
        others = [b for b in blocks if len(b) > 1]
        if len(blocks) == 1:
            est += c * t.mean(axis=1)
            loo += c * (alpha * t.mean(axis=1)[:, None] + beta * t)
            continue
        for r in range(len(others) + 1):
            for chosen in itertools.combinations(others, r):
                T = singles + list(chosen)
                fixed = [b for b in others if b not in chosen]
                coef = c * alpha ** len(fixed) * beta ** len(T)
                U = sorted(i for b in T for i in b)
                if len(U) == p:
                    loo += coef * t
                    continue
                ops = [W]
                subs = [wsub]
                for b in fixed:
                    if b not in moments:
                        moments[b] = _block_moment(Y, b)
                    ops.append(moments[b])
                    subs.append("".join(_LETTERS[i] for i in b))
                out = "z" + "".join(_LETTERS[i] for i in U)
                V = np.einsum(",".join(subs) + "->" + out, *ops, optimize=True)
                if not U:
                    est += c * V
                    loo += coef * V[:, None]
                    continue
                ysubs = ["n" + _LETTERS[i] for i in U]
                vals = np.einsum(out + "," + ",".join(ysubs) + "->zn", V, *[Y[i] for i in U], optimize=True)
                loo += coef * vals
    return est, loo


def polyspectrum_estimate(p: int, e: CoeffEnsemble, lmax: int | None = None) -> PolySpectrum:
    """Replicate-ensemble estimate of the order-``p`` polyspectrum with jackknife errors.

    Sample cumulants are plug-in (biased, O(1/N)) and combined with the coupling
    weights over zero-sum order tuples. The leave-one-replicate-out estimates are
    computed exactly in closed form. The reported error folds the imaginary part
    of the estimate into the jackknife error in quadrature.
    """
    _check_order(p)
    lmax = e.lmax if lmax is None else int(lmax)
    if lmax > e.lmax:
        raise ValueError(f"lmax {lmax} exceeds ensemble band limit {e.lmax}")
    n = len(e)
    if n < p + 1:
        raise ValueError(f"order {p} needs at least {p + 1} replicates, got {n}")
    centered = {l: e.blocks(l) - e.blocks(l).mean(axis=0) for l in range(lmax + 1)}
    out = PolySpectrum(p)
    by_degrees: dict[tuple, list] = {}
    for ls, d in principal_domain(p, lmax):
        by_degrees.setdefault(ls, []).append(d)
    for ls in by_degrees:
        diags, Wsym = coupling_stack(ls, symmetrize=True)
        W = np.stack([coupling_tensor(ls, d) for d in diags])
        Y = [centered[l] for l in ls]
        est, loo = _estimate_degrees(ls, W, diags, Y)
        jk = np.sqrt((n - 1.0) / n * ((loo.real - loo.real.mean(axis=1, keepdims=True)) ** 2).sum(axis=1))
        se = np.hypot(jk, est.imag)
        norms = np.sqrt((Wsym.reshape(len(diags), -1) ** 2).sum(axis=1))
        for k, d in enumerate(diags):
            key = (ls, d)
            if norms[k] < STRUCTURAL_TOL:
                out.entries[key] = 0.0
                out.se[key] = 0.0
                out.structural.add(key)
            else:
                out.entries[key] = float(est[k].real)
                out.se[key] = float(se[k])
    return out


# ---------------------------------------------------------------------------
# Derived quantities
# ---------------------------------------------------------------------------

def bicoherence(B: PolySpectrum, f: AngularPowerSpectrum) -> dict:
    """``B(l1,l2,l3) / sqrt(f_l1 f_l2 f_l3)`` per key."""
    if B.p != 3:
        raise ValueError("bicoherence needs an order-3 spectrum")
    out = {}
    for (ls, d), v in B.items():
        for l in ls:
            if l > f.lmax or f[l] <= 0:
                raise ZeroDivisionError(f"power spectrum vanishes or is missing at degree {l}")
        out[(ls, d)] = v / math.sqrt(f[ls[0]] * f[ls[1]] * f[ls[2]])
    return out


def bicovariance_kernel(l1: int, l2: int, l3: int, theta1, phi1, theta2) -> np.ndarray:
    """Rotation-reduced kernel ``I(theta1, phi1, theta2)`` of the bicovariance expansion.

    ``sqrt((2 l3 + 1)/(4 pi)) sum_m 3j(l1 l2 l3; m, -m, 0) Y_l1^m(theta1, phi1) Y_l2^-m(theta2, 0)``.
    Its squared norm over both spheres is ``1/(4 pi)``.
    """
    if not _admissible(l1, l2, l3):
        return np.zeros(np.broadcast(theta1, phi1, theta2).shape)
    tab = wigner_3j_table(l1, l2, l3)
    acc = 0.0
    for m in range(-min(l1, l2), min(l1, l2) + 1):
        w = tab[m + l1, -m + l2]
        if w:
            acc = acc + w * spherical_harmonic(l1, m, theta1, phi1) * spherical_harmonic(l2, -m, theta2, 0.0)
    val = math.sqrt((2 * l3 + 1) / (4 * math.pi)) * acc
    return np.real(val) if (l1 + l2 + l3) % 2 == 0 else val


def bicovariance_series(
    B: PolySpectrum,
    theta1,
    phi1=None,
    theta2=None,
    lmax: int | None = None,
    *,
    phi2=None,
):
    """Bicovariance ``Cum3(X(theta1, phi1), X(theta2, 0), X(north pole))`` from a bispectrum.

    Sums ``B(l1,l2,l3) I_{l1 l2 l3}`` over all ordered degree triples up to ``lmax``.
    ``phi2`` is accepted as an alias for the free azimuth ``phi1``.
    """
    if B.p != 3:
        raise ValueError("bicovariance needs an order-3 spectrum")
    if phi1 is None:
        phi1 = phi2
    elif phi2 is not None:
        raise TypeError("give the azimuth as phi1 or phi2, not both")
    if phi1 is None or theta2 is None:
        raise TypeError("theta1, phi1 (or phi2) and theta2 are required")
    top = max((max(ls) for ls, _ in B.keys()), default=0)
    lmax = top if lmax is None else int(lmax)
    total = np.zeros(np.broadcast(theta1, phi1, theta2).shape)
    for (ls, _), v in B.items():
        if v == 0 or max(ls) > lmax:
            continue
        for perm in set(itertools.permutations(ls)):
            total = total + v * bicovariance_kernel(*perm, theta1, phi1, theta2)
    return float(total) if total.ndim == 0 else total


def _loc(L) -> tuple[float, float]:
    th, ph = L
    return float(th), float(ph)


def invariant_I2(l: int, L1, L2) -> complex:
    """``4 pi / (2l+1) sum_k Y_l^k(L1) conj(Y_l^k(L2))``; equals ``P_l(L1 . L2)``."""
    (t1, p1), (t2, p2) = _loc(L1), _loc(L2)
    acc = sum(spherical_harmonic(l, k, t1, p1) * np.conj(spherical_harmonic(l, k, t2, p2)) for k in range(-l, l + 1))
    return complex(4 * math.pi / (2 * l + 1) * acc)


def invariant_I3(l1: int, l2: int, l3: int, L1, L2, L3) -> complex:
    """``(4 pi)^{3/2} / sqrt(prod(2 l_j + 1)) sum_m 3j(l; m) Y Y Y``; locations as ``(theta, phi)``."""
    (t1, p1), (t2, p2), (t3, p3) = _loc(L1), _loc(L2), _loc(L3)
    if not _admissible(l1, l2, l3):
        return 0j
    tab = wigner_3j_table(l1, l2, l3)
    y1 = np.array([spherical_harmonic(l1, m, t1, p1) for m in range(-l1, l1 + 1)])
    y2 = np.array([spherical_harmonic(l2, m, t2, p2) for m in range(-l2, l2 + 1)])
    y3 = np.array([spherical_harmonic(l3, m, t3, p3) for m in range(-l3, l3 + 1)])
    m1 = np.arange(-l1, l1 + 1)[:, None]
    m2 = np.arange(-l2, l2 + 1)[None, :]
    m3 = -(m1 + m2)
    ok = np.abs(m3) <= l3
    y3g = np.where(ok, y3[np.clip(m3 + l3, 0, 2 * l3)], 0.0)
    acc = np.sum(tab * y1[:, None] * y2[None, :] * y3g)
    norm = (4 * math.pi) ** 1.5 / math.sqrt((2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1))
    return complex(norm * acc)
