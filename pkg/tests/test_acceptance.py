"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line before asserting."""

import itertools
import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from isospec import cli, cumulants, harmonics, models, simulate, spectra, verify, wigner


@pytest.fixture
def report(capsys):
    def emit(n, title, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n:>2}: {title} | {detail}")
        return ok

    return emit


def test_criterion_01_wigner_identities(report):
    t0 = time.perf_counter()
    orth = verify._orthogonality(10)
    closed = verify._closed_form_zero(10)
    # selection rules: every violating symbol is exactly zero
    exact = True
    for l1, l2, l3 in itertools.product(range(7), repeat=3):
        for m1, m2, m3 in itertools.product(range(-l1, l1 + 1), range(-l2, l2 + 1), range(-l3, l3 + 1)):
            violates = m1 + m2 + m3 != 0 or not abs(l1 - l2) <= l3 <= l1 + l2
            if violates and wigner.wigner_3j(l1, l2, l3, m1, m2, m3) != 0.0:
                exact = False
    d222 = abs(wigner.wigner_3j(2, 2, 2, 0, 0, 0) + math.sqrt(2 / 35))
    dt = time.perf_counter() - t0
    ok = orth < 1e-10 and closed < 1e-12 and d222 < 1e-12 and exact and dt < 10
    report(1, "Wigner identity suite", ok, f"orth={orth:.1e} closed={closed:.1e} (222)={d222:.1e} selection_exact={exact} t={dt:.1f}s")
    assert ok


def test_criterion_02_haar_integrals(report):
    t0 = time.perf_counter()
    r123 = verify._haar_products(4)
    r4 = max(verify._integral_identity(4, 3, n_k=6), verify._sum_identity(4, 3, trials=3), verify._kernel_symmetry(3))
    r5 = max(verify._integral_identity(5, 2, n_k=4), verify._sum_identity(5, 2, trials=3))
    dt = time.perf_counter() - t0
    ok = r123 < 1e-10 and r4 < 1e-9 and r5 < 1e-9 and dt < 60
    report(2, "D-matrix / Haar suite", ok, f"1-3 fold={r123:.1e} p4={r4:.1e} p5={r5:.1e} t={dt:.1f}s")
    assert ok


def test_criterion_03_sht(report):
    rt = verify._sht_round_trip(32)
    add = verify._addition_theorem(12)
    ok = rt < 1e-9 and add < 1e-11
    report(3, "SHT round trip and addition theorem", ok, f"round_trip(l=32)={rt:.1e} addition={add:.1e}")
    assert ok


def test_criterion_04_model_zoo(report):
    zoo = [
        models.LaplaceBeltrami(1.0),
        models.GeneratingInvPow(0.5, 3),
        models.GeneratingInvPow(0.4, 5),
        models.PoissonKernelPow(0.4, 3),
        models.PoissonKernelPow(0.5, 4),
        models.ExpKappa(2.0),
        models.ExpJ0(1.5),
        models.BesselI0Product(1.2),
    ]
    worst = 0.0
    for m in zoo:
        f = models.model_spectrum(m, 16).f
        g = harmonics.legendre_transform(m.covariance, 16, nquad=200, variable="angle").f
        worst = max(worst, np.abs(f - g).max())
    # numeric Poisson-formula spectrum versus the transform of the restricted covariance
    sm = models.SpectralMeasure(density="laplace_beltrami", density_params={"c": 1.0})
    cov = lambda gam: np.exp(-2 * np.sin(gam / 2)) / (8 * np.pi)
    ps = np.abs(sm.spectrum(16).f - harmonics.legendre_transform(cov, 16, nquad=80, variable="angle").f).max()
    f2 = models.LaplaceBeltrami(1.0).spectrum(2)[2]
    exact = Fraction(f2) == Fraction(1, 49) or f2 == 1 / 49
    ok = worst < 1e-7 and ps < 1e-7 and exact
    report(4, "model zoo consistency", ok, f"closed_vs_transform={worst:.1e} poisson_vs_transform={ps:.1e} f2(c=1)==1/49:{exact}")
    assert ok


def test_criterion_05_cumulant_algebra(report):
    rt = verify._cumulant_round_trip(6)
    mom = {frozenset(s): math.factorial(len(s)) for r in range(1, 5) for s in itertools.combinations(range(4), r)}
    k3 = cumulants.cumulant_from_moments({k: v for k, v in mom.items() if max(k) < 3}, 3)
    k4 = cumulants.cumulant_from_moments(mom, 4)
    ok = rt < 1e-12 and k3 == 2 and k4 == 6
    report(5, "cumulant algebra", ok, f"round_trip(n<=6)={rt:.1e} exp kappa3={k3} kappa4={k4}")
    assert ok


def test_criterion_06_polyspectrum_inversion(report):
    r3, r4, r5 = verify._inversion(3, 6), verify._inversion(4, 4), verify._inversion(5, 2)
    S = spectra.PolySpectrum(3, {k: 1.0 for k in spectra.principal_domain(3, 3)})
    T = spectra.PolySpectrum(4, {k: 1.0 for k in spectra.principal_domain(4, 2)})
    zeros = (
        spectra.cumulants_from_polyspectrum(3, S, (1, 1, 1), (1, 0, -1)) == 0.0
        and spectra.cumulants_from_polyspectrum(3, S, (1, 2, 3), (1, 1, 0)) == 0.0
        and spectra.cumulants_from_polyspectrum(4, T, (0, 1, 1, 1), (0, 0, 0, 0)) == 0.0
        and spectra.cumulants_from_polyspectrum(4, T, (1, 1, 2, 2), (1, 1, 0, 0)) == 0.0
    )
    ok = max(r3, r4, r5) < 1e-10 and zeros
    report(6, "polyspectrum inversion", ok, f"p3(l<=6)={r3:.1e} p4(l<=4)={r4:.1e} p5(l<=2)={r5:.1e} structural_zeros={zeros}")
    assert ok


def _z_scores(S, target=None):
    out = {}
    for k, v in S.items():
        if k in S.structural:
            continue
        t = 0.0 if target is None else target[k]
        out[k] = abs(v - t) / S.se[k]
    return out


def test_criterion_07_gaussian_null(report):
    t0 = time.perf_counter()
    f = models.model_spectrum(models.LaplaceBeltrami(1.0), 8)
    e = simulate.run_ensemble(simulate.SimulationConfig(f, 2000, 20240607))
    zb = _z_scores(spectra.polyspectrum_estimate(3, e, 8))
    zt = _z_scores(spectra.polyspectrum_estimate(4, e, 8))
    dt = time.perf_counter() - t0
    mb, mt = max(zb.values()), max(zt.values())
    ok = mb < 4 and mt < 4 and dt < 300
    report(7, "Gaussian null", ok, f"B3 keys={len(zb)} max|z|={mb:.2f}; T4 keys={len(zt)} max|z|={mt:.2f}; t={dt:.0f}s")
    assert ok


def test_criterion_08_nongaussian_target(report):
    t0 = time.perf_counter()
    spec = simulate.BaseArraySpec((1.0,) * 7, "centered_exponential", nongaussian_degrees={2})
    e = simulate.run_ensemble(simulate.SimulationConfig(spec, 5000, 8))
    B = spectra.polyspectrum_estimate(3, e, 6)
    T = spectra.polyspectrum_estimate(4, e, 2)
    key = ((2, 2, 2), ())
    target = -2 * math.sqrt(2 / 35)
    zb = abs(B[key] - target) / B.se[key]
    others = max(z for k, z in _z_scores(B).items() if k != key)
    tz = {}
    for L in (0, 2, 4):
        tk = ((2, 2, 2, 2), (L,))
        ref = math.sqrt(2 * L + 1) * wigner.wigner_3j_zero(2, 2, L) ** 2 * 6.0
        tz[L] = abs(T[tk] - ref) / T.se[tk]
    dt = time.perf_counter() - t0
    ok = zb < 5 and others < 4 and max(tz.values()) < 5 and dt < 900
    detail = (
        f"B3(2,2,2)={B[key]:.4f}+-{B.se[key]:.4f} vs {target:.7f} (z={zb:.2f}); other B3 max|z|={others:.2f}; "
        f"T4 z(L=0,2,4)=" + ",".join(f"{tz[L]:.2f}" for L in (0, 2, 4)) + f"; t={dt:.0f}s"
    )
    report(8, "non-Gaussian target", ok, detail)
    assert ok


def test_criterion_09_isotropy(report):
    lmax = 6
    spec = simulate.BaseArraySpec((1.0,) * (lmax + 1), "centered_exponential")
    e = simulate.run_ensemble(simulate.SimulationConfig(spec, 4000, 99))
    rng = np.random.default_rng(9)
    gamma = 0.8
    C = harmonics.covariance_eval(np.ones(lmax + 1), math.cos(gamma))
    z = []
    for _ in range(10):
        g = wigner.sample_haar_rotation(rng).matrix()
        x, y = g @ np.array([0, 0, 1.0]), g @ np.array([math.sin(gamma), 0, math.cos(gamma)])
        th = np.arccos(np.clip([x[2], y[2]], -1, 1))
        ph = np.arctan2([x[1], y[1]], [x[0], y[0]])
        vals = np.array([harmonics.synthesize_points(c, th, ph) for c in e.replicates])
        prod = vals[:, 0] * vals[:, 1]
        z.append(abs(prod.mean() - C) / (prod.std(ddof=1) / math.sqrt(len(prod))))
    rot = wigner.sample_haar_rotation(rng)
    f0 = spectra.power_spectrum_estimate(e).f
    f1 = spectra.power_spectrum_estimate(
        spectra.CoeffEnsemble(tuple(wigner.rotate_coefficients(c, rot) for c in e.replicates))
    ).f
    inv = np.abs(f1 - f0).max()
    ok = max(z) < 5 and inv < 1e-12
    report(9, "isotropy of construction", ok, f"10 pairs at gamma={gamma}: max|z|={max(z):.2f}; power invariance={inv:.1e}")
    assert ok


def test_criterion_10_poisson_probe(report, tmp_path):
    code = cli.main(["verify", "--level", "full", "--out", str(tmp_path)])
    rep = json.loads((tmp_path / "report.json").read_text())
    probe = rep["findings"]["poisson_formula_probe"]
    tail = probe["max_tail_bound"]
    row0 = probe["rows"][0]
    ok = code == 0 and rep["passed"] and tail <= 1e-9 and "agrees_with_closed_form" in probe
    verdict = "agrees" if probe["agrees_with_closed_form"] else "disagrees"
    report(
        10,
        "Poisson-formula probe",
        ok,
        f"verify full exit={code}; tail<={tail:.1e}; l=0 numeric={row0['numeric']:.10f} closed form={row0['closed_form']:.1f} ({verdict}, recorded as finding)",
    )
    assert ok
