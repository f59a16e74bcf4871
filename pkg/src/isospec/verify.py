"""Cross-module identity checks behind ``isospec verify``.

Each check returns a residual and a tolerance. Library calls go through module
attributes (``wigner.wigner_3j`` rather than a bound name) so that a patched
function is what the checks exercise.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import cumulants, harmonics, models, simulate, spectra, wigner

__all__ = ["CheckResult", "run_checks", "CHECKS", "poisson_probe"]


@dataclass
class CheckResult:
    name: str
    residual: float
    tolerance: float
    passed: bool
    seconds: float
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# Wigner algebra
# ---------------------------------------------------------------------------

def _orthogonality(lmax: int) -> float:
    worst = 0.0
    f = wigner.wigner_3j
    for l1 in range(lmax + 1):
        for l2 in range(lmax + 1):
            ls = range(abs(l1 - l2), l1 + l2 + 1)
            for m in range(-(l1 + l2), l1 + l2 + 1):
                vecs = {}
                for l in ls:
                    if abs(m) > l:
                        continue
                    vecs[l] = np.array(
                        [f(l1, l2, l, m1, -m - m1, m) for m1 in range(-l1, l1 + 1) if abs(m + m1) <= l2]
                    )
                for a, va in vecs.items():
                    for b, vb in vecs.items():
                        target = 1.0 if a == b else 0.0
                        worst = max(worst, abs((2 * a + 1) * va @ vb - target))
    return worst


def _closed_form_zero(lmax: int) -> float:
    worst = abs(wigner.wigner_3j_zero(2, 2, 2) + math.sqrt(2 / 35))
    for l1, l2, l3 in itertools.product(range(lmax + 1), repeat=3):
        if abs(l1 - l2) <= l3 <= l1 + l2:
            worst = max(worst, abs(wigner.wigner_3j_zero(l1, l2, l3) - wigner.wigner_3j(l1, l2, l3, 0, 0, 0)))
    return worst


def _d_matrices() -> float:
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(5):
        g1 = wigner.sample_haar_rotation(rng)
        g2 = wigner.sample_haar_rotation(rng)
        for l in (1, 4, 8):
            D1 = wigner.wigner_D(l, g1).entries
            D2 = wigner.wigner_D(l, g2).entries
            D12 = wigner.wigner_D(l, g1.compose(g2)).entries
            worst = max(worst, np.abs(D1 @ D2 - D12).max(), np.abs(D1.conj().T @ D1 - np.eye(2 * l + 1)).max())
    return float(worst)


def _D_nodes(ls, lmax_q):
    phi, theta, gamma, w = wigner.so3_quadrature(lmax=lmax_q)
    return [wigner.wigner_D_stack(l, phi, theta, gamma) for l in ls], w


def _haar_products(lmax: int) -> float:
    """Haar integrals of one, two and three D entries over every row/column tuple."""
    worst = 0.0
    for l in range(lmax + 1):
        (D,), w = _D_nodes([l], l)
        one = np.einsum("q,qmk->mk", w, D)
        target = np.zeros_like(one)
        if l == 0:
            target[0, 0] = 1.0
        worst = max(worst, np.abs(one - target).max())
    for l1, l2 in itertools.product(range(lmax + 1), repeat=2):
        (D1, D2), w = _D_nodes([l1, l2], l1 + l2)
        two = np.einsum("q,qab,qcd->abcd", w, D1, D2.conj())
        if l1 == l2:
            eye = np.eye(2 * l1 + 1)
            target = np.einsum("ac,bd->abcd", eye, eye) / (2 * l1 + 1)
        else:
            target = 0.0
        worst = max(worst, np.abs(two - target).max())
    for l1, l2, l3 in itertools.combinations_with_replacement(range(lmax + 1), 3):
        if not abs(l1 - l2) <= l3 <= l1 + l2:
            continue
        (D1, D2, D3), w = _D_nodes([l1, l2, l3], l1 + l2 + l3)
        W = spectra.coupling_tensor((l1, l2, l3))
        n3 = 2 * l3 + 1
        D3w = (w[:, None, None] * D3).reshape(w.size, n3 * n3)
        for k1 in range(2 * l1 + 1):
            for k2 in range(2 * l2 + 1):
                A = np.einsum("qa,qb->abq", D1[:, :, k1], D2[:, :, k2]).reshape(-1, w.size)
                got = (A @ D3w).reshape(2 * l1 + 1, 2 * l2 + 1, n3, n3)
                target = np.einsum("abc,k->abck", W, W[k1, k2])
                worst = max(worst, np.abs(got - target).max())
    return float(worst)


def _apply_D(W: np.ndarray, Ds: list[np.ndarray]) -> np.ndarray:
    out = W
    for a, D in enumerate(Ds):
        out = np.moveaxis(np.tensordot(D, out, axes=([1], [a])), 0, a)
    return out


def _sum_identity(p: int, lmax: int, trials: int = 3) -> float:
    """sum_m prod_a D_{k_a m_a} W(m) = W(k) for every coupling."""
    rng = np.random.default_rng(5)
    worst = 0.0
    for ls in itertools.combinations_with_replacement(range(lmax + 1), p):
        for d in spectra.diagonals(ls):
            W = spectra.coupling_tensor(ls, d)
            for _ in range(trials):
                g = wigner.sample_haar_rotation(rng)
                Ds = [wigner.wigner_D(l, g).entries for l in ls]
                worst = max(worst, np.abs(_apply_D(W, Ds) - W).max())
    return float(worst)


def _integral_identity(p: int, lmax: int, n_k: int = 2) -> float:
    """int prod_a D_{k_a m_a} dg = sum_diag W(k) W(m), checked on sampled row tuples k."""
    rng = np.random.default_rng(7)
    worst = 0.0
    tuples = list(itertools.combinations_with_replacement(range(lmax + 1), p))
    for ls in tuples:
        if sum(ls) % 2:
            continue
        diags, W = spectra.coupling_stack(ls, symmetrize=False)
        Ds, w = _D_nodes(ls, sum(ls))
        for _ in range(n_k):
            k = tuple(int(rng.integers(0, 2 * l + 1)) for l in ls)
            cols = [D[:, kk, :] for D, kk in zip(Ds, k)]
            sub = ",".join("q" + "abcde"[a] for a in range(p))
            got = np.einsum("q," + sub + "->" + "abcde"[:p], w, *cols)
            Wk = W[(slice(None),) + k]
            target = np.tensordot(Wk, W, axes=([0], [0])) if len(diags) else 0.0
            worst = max(worst, np.abs(got - target).max())
    return float(worst)


def _kernel_symmetry(lmax: int) -> float:
    """The summed four-fold kernel is invariant under all 24 slot permutations."""
    worst = 0.0
    for ls in itertools.product(range(lmax + 1), repeat=4):
        if sum(ls) % 2 or list(ls) != sorted(ls):
            continue
        K = _kernel4(ls)
        for perm in itertools.permutations(range(4)):
            lp = tuple(ls[i] for i in perm)
            Kp = _kernel4(lp)
            # K_lp(k_perm, m_perm) versus K_ls(k, m)
            back = np.transpose(Kp, tuple(np.argsort(perm)) + tuple(4 + i for i in np.argsort(perm)))
            worst = max(worst, np.abs(back - K).max())
    return float(worst)


def _kernel4(ls) -> np.ndarray:
    if not spectra.diagonals(ls):
        return np.zeros(tuple(2 * l + 1 for l in ls) * 2)
    W = np.stack([spectra.coupling_tensor(tuple(ls), d) for d in spectra.diagonals(ls)])
    return np.tensordot(W, W, axes=([0], [0]))


# ---------------------------------------------------------------------------
# Harmonics and models
# ---------------------------------------------------------------------------

def _sht_round_trip(lmax: int) -> float:
    rng = np.random.default_rng(3)
    z = np.tril(rng.standard_normal((lmax + 1, lmax + 1)) + 1j * rng.standard_normal((lmax + 1, lmax + 1)))
    z[:, 0] = z[:, 0].real
    c = harmonics.HarmonicCoeffs(lmax, z)
    g = harmonics.SphereGrid.gauss(lmax)
    back = harmonics.analyze(harmonics.synthesize(c, g), lmax)
    return float(np.abs(back.z - c.z).max())


def _addition_theorem(lmax: int) -> float:
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(20):
        t1, t2 = np.arccos(rng.uniform(-1, 1, 2))
        p1, p2 = rng.uniform(0, 2 * np.pi, 2)
        cosg = np.cos(t1) * np.cos(t2) + np.sin(t1) * np.sin(t2) * np.cos(p1 - p2)
        for l in range(lmax + 1):
            s = sum(
                np.conj(harmonics.spherical_harmonic(l, m, t1, p1)) * harmonics.spherical_harmonic(l, m, t2, p2)
                for m in range(-l, l + 1)
            )
            worst = max(worst, abs(s - (2 * l + 1) / (4 * np.pi) * harmonics.legendre(l, cosg)))
    return float(worst)


def _model_consistency() -> float:
    zoo = [
        models.LaplaceBeltrami(1.0),
        models.GeneratingInvPow(0.5, 3),
        models.PoissonKernelPow(0.4, 3),
        models.ExpKappa(2.0),
        models.ExpJ0(1.5),
        models.BesselI0Product(1.2),
    ]
    worst = abs(models.model_spectrum(zoo[0], 2)[2] - 1 / 49)
    for m in zoo:
        f = models.model_spectrum(m, 16).f
        g = harmonics.legendre_transform(m.covariance, 16, nquad=160, variable="angle").f
        worst = max(worst, np.abs(f - g).max())
    return float(worst)


def _cumulant_round_trip(nmax: int) -> float:
    rng = np.random.default_rng(8)
    worst = 0.0
    for n in range(1, nmax + 1):
        subsets = [frozenset(c) for k in range(1, n + 1) for c in itertools.combinations(range(n), k)]
        mom = {s: complex(rng.standard_normal(), rng.standard_normal()) for s in subsets}
        cum = {}
        for s in subsets:
            idx = sorted(s)
            rel = {frozenset(idx.index(i) for i in t): mom[t] for t in subsets if t <= s}
            cum[s] = cumulants.cumulant_from_moments(rel, len(idx))
        for s in subsets:
            idx = sorted(s)
            rel = {frozenset(idx.index(i) for i in t): cum[t] for t in subsets if t <= s}
            worst = max(worst, abs(cumulants.moment_from_cumulants(rel, len(idx)) - mom[s]))
    return float(worst)


# ---------------------------------------------------------------------------
# Polyspectrum maps
# ---------------------------------------------------------------------------

def _random_table(p: int, lmax: int, rng) -> spectra.PolySpectrum:
    return spectra.PolySpectrum(p, {k: rng.standard_normal() for k in spectra.principal_domain(p, lmax)})


def _forward(p: int, S: spectra.PolySpectrum) -> Callable:
    return lambda ls, ms: spectra.cumulants_from_polyspectrum(p, S, ls, ms)


def _inversion(p: int, lmax: int) -> float:
    """Project a random table onto the admissible set, then require both round trips to close."""
    rng = np.random.default_rng(10 + p)
    S0 = _random_table(p, lmax, rng)
    S1 = spectra.polyspectrum_from_cumulants(p, _forward(p, S0), lmax)
    S2 = spectra.polyspectrum_from_cumulants(p, _forward(p, S1), lmax)
    worst = max(abs(S2[k] - S1[k]) for k in S1.keys())
    for ls, _ in itertools.islice(spectra.principal_domain(p, lmax), 0, None, 7):
        for ms in itertools.islice(spectra._zero_sum_orders(ls), 0, None, 5):
            worst = max(
                worst,
                abs(
                    spectra.cumulants_from_polyspectrum(p, S2, ls, ms)
                    - spectra.cumulants_from_polyspectrum(p, S1, ls, ms)
                ),
            )
    return float(worst)


# ---------------------------------------------------------------------------
# Monte Carlo and the Poisson probe
# ---------------------------------------------------------------------------

def _gaussian_null() -> tuple[float, str]:
    f = models.model_spectrum(models.LaplaceBeltrami(1.0), 4)
    e = simulate.run_ensemble(simulate.SimulationConfig(f, 1000, 2024))
    worst = 0.0
    for p in (3, 4):
        S = spectra.polyspectrum_estimate(p, e, 4)
        z = [abs(S[k]) / S.se[k] for k in S.keys() if k not in S.structural]
        worst = max(worst, max(z))
    return worst, "max |estimate| / SE over all B3 and T4 keys, N=1000, lmax=4"


def _nongaussian_target() -> tuple[float, str]:
    spec = simulate.BaseArraySpec((1.0,) * 5, "centered_exponential", nongaussian_degrees=frozenset({2}))
    e = simulate.run_ensemble(simulate.SimulationConfig(spec, 3000, 77))
    B = spectra.polyspectrum_estimate(3, e, 4)
    th = simulate.theoretical_polyspectra(spec, 3)
    k = ((2, 2, 2), ())
    return abs(B[k] - th[k]) / B.se[k], f"B3(2,2,2)={B[k]:.4f} se={B.se[k]:.4f} target={th[k]:.4f}"


def poisson_probe(c: float = 1.0, lmax: int = 4, tol: float = 1e-9) -> dict:
    """Numeric Poisson-formula spectrum of the Laplace-Beltrami density versus the closed form."""
    S = models.laplace_beltrami_density(c)
    rows = []
    for l in range(lmax + 1):
        r = models.poisson_formula_spectrum(S, l, tol=tol, full_output=True)
        claim = (l * (l + 1) + c * c) ** -2.0
        rows.append(
            {
                "l": l,
                "numeric": r.value,
                "tail_bound": r.tail_bound,
                "lambda_max": r.lambda_max,
                "closed_form": claim,
                "ratio": r.value / claim,
            }
        )
    # closed form of the l = 0 integral: f_0 = (1 - exp(-2c)(1 + 2c)) / (4 c^3)
    f0 = (1 - math.exp(-2 * c) * (1 + 2 * c)) / (4 * c**3)
    agree = all(abs(r["numeric"] - r["closed_form"]) <= 1e-6 for r in rows)
    return {
        "c": c,
        "rows": rows,
        "independent_l0": f0,
        "l0_abs_diff": abs(rows[0]["numeric"] - f0),
        "agrees_with_closed_form": agree,
        "max_tail_bound": max(r["tail_bound"] for r in rows),
    }


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

def _entry(name, fn, tol):
    return (name, fn, tol)


CHECKS = {
    "quick": [
        _entry("wigner_3j_orthogonality", lambda: _orthogonality(5), 1e-10),
        _entry("wigner_3j_zero_closed_form", lambda: _closed_form_zero(8), 1e-12),
        _entry("wigner_D_unitarity_composition", _d_matrices, 1e-10),
        _entry("haar_1_2_3_fold_integrals", lambda: _haar_products(2), 1e-10),
        _entry("sum_identity_p4", lambda: _sum_identity(4, 2), 1e-10),
        _entry("sht_round_trip_l16", lambda: _sht_round_trip(16), 1e-9),
        _entry("addition_theorem", lambda: _addition_theorem(10), 1e-11),
        _entry("model_zoo_consistency", _model_consistency, 1e-7),
        _entry("cumulant_round_trip", lambda: _cumulant_round_trip(5), 1e-12),
        _entry("polyspectrum_inversion_p3", lambda: _inversion(3, 4), 1e-10),
        _entry("polyspectrum_inversion_p4", lambda: _inversion(4, 3), 1e-10),
    ],
    "full": [
        _entry("wigner_3j_orthogonality_l10", lambda: _orthogonality(10), 1e-10),
        _entry("haar_1_2_3_fold_integrals_l4", lambda: _haar_products(4), 1e-10),
        _entry("sum_identity_p4_l3", lambda: _sum_identity(4, 3, trials=2), 1e-10),
        _entry("integral_identity_p4_l3", lambda: _integral_identity(4, 3), 1e-9),
        _entry("kernel_symmetry_p4_l3", lambda: _kernel_symmetry(3), 1e-10),
        _entry("sum_identity_p5_l2", lambda: _sum_identity(5, 2, trials=1), 1e-9),
        _entry("integral_identity_p5_l2", lambda: _integral_identity(5, 2, n_k=1), 1e-9),
        _entry("sht_round_trip_l32", lambda: _sht_round_trip(32), 1e-9),
        _entry("cumulant_round_trip_n6", lambda: _cumulant_round_trip(6), 1e-12),
        _entry("polyspectrum_inversion_p3_l6", lambda: _inversion(3, 6), 1e-10),
        _entry("polyspectrum_inversion_p4_l4", lambda: _inversion(4, 4), 1e-10),
        _entry("polyspectrum_inversion_p5_l2", lambda: _inversion(5, 2), 1e-10),
        _entry("mc_gaussian_null", _gaussian_null, 5.0),
        _entry("mc_nongaussian_bispectrum", _nongaussian_target, 5.0),
    ],
}


def run_checks(level: str = "quick") -> tuple[list[CheckResult], dict]:
    """Run the checks for ``level``; returns results and recorded findings."""
    if level not in CHECKS:
        raise ValueError(f"level must be one of {sorted(CHECKS)}")
    todo = list(CHECKS["quick"]) + (list(CHECKS["full"]) if level == "full" else [])
    results = []
    for name, fn, tol in todo:
        t0 = time.perf_counter()
        detail = ""
        try:
            out = fn()
            if isinstance(out, tuple):
                out, detail = out
            res = float(out)
            ok = bool(res <= tol)
        except Exception as exc:  # a crashing check is a failed check
            res, ok, detail = float("inf"), False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, res, tol, ok, time.perf_counter() - t0, detail))
    findings = {}
    if level == "full":
        findings["poisson_formula_probe"] = poisson_probe()
    return results, findings
