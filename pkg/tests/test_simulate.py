import json
import math

import numpy as np
import pytest

from isospec import harmonics as h
from isospec import io as iso_io
from isospec import simulate, spectra, wigner

F = h.AngularPowerSpectrum([1.0, 0.5, 2.0, 0.25])


def test_replicate_streams_do_not_depend_on_ensemble_size_or_threads():
    a = simulate.run_ensemble(simulate.SimulationConfig(F, 6, 11))
    b = simulate.run_ensemble(simulate.SimulationConfig(F, 9, 11), threads=4)
    for x, y in zip(a.replicates, b.replicates):
        assert np.array_equal(x.z, y.z)
    assert a.metadata["checksums"] == b.metadata["checksums"][:6]
    c = simulate.run_ensemble(simulate.SimulationConfig(F, 6, 12))
    assert not np.array_equal(a.replicates[0].z, c.replicates[0].z)


def test_gaussian_coefficient_variances():
    rng = np.random.default_rng(0)
    n = 4000
    z = np.stack([simulate.gaussian_coefficients(F, rng).z for _ in range(n)])
    for l in range(4):
        v0 = (z[:, l, 0].real ** 2).mean()
        assert abs(v0 - F[l]) < 5 * F[l] * math.sqrt(2 / n)
        assert np.all(z[:, l, 0].imag == 0)
        for m in range(1, l + 1):
            re, im = z[:, l, m].real, z[:, l, m].imag
            assert abs((re**2).mean() - F[l] / 2) < 5 * F[l] / 2 * math.sqrt(2 / n)
            assert abs((re * im).mean()) < 5 * F[l] / 2 / math.sqrt(n)


def test_base_array_skewness_at_declared_degrees():
    spec = simulate.BaseArraySpec((1.0, 1.0, 4.0), "centered_exponential", nongaussian_degrees={2})
    rng = np.random.default_rng(1)
    z0 = np.array([simulate.base_array(spec, rng).z[:, 0].real for _ in range(20000)])
    k3 = ((z0 - z0.mean(axis=0)) ** 3).mean(axis=0)
    assert k3[2] == pytest.approx(spec.cumulants(2)[1], rel=0.15)  # 2 * 4^1.5 = 16
    assert abs(k3[1]) < 0.2
    assert spec.cumulants(1) == (1.0, 0.0, 0.0)


def test_centered_gamma_cumulants():
    spec = simulate.BaseArraySpec((1.0,), "centered_gamma", shape=4.0)
    assert spec.standardized_cumulants() == (1.0, 1.5)


def test_dtransform_second_moments_are_isotropic():
    spec = simulate.BaseArraySpec((1.0, 1.0, 1.0), "centered_exponential")
    e = simulate.run_ensemble(simulate.SimulationConfig(spec, 3000, 5))
    n = len(e)
    for l in (1, 2):
        Y = e.blocks(l)
        cov = Y.T @ Y.conj() / n
        assert np.abs(np.diag(cov) - 1.0).max() < 5 * math.sqrt(3 / n)
        off = cov - np.diag(np.diag(cov))
        assert np.abs(off).max() < 6 / math.sqrt(n)


def test_theoretical_bispectrum_and_trispectrum():
    spec = simulate.BaseArraySpec((1.0, 1.0, 1.0), "centered_exponential", nongaussian_degrees={2})
    B = simulate.theoretical_polyspectra(spec, 3)
    assert B[((2, 2, 2), ())] == pytest.approx(-2 * math.sqrt(2 / 35), abs=1e-15)
    assert all(v == 0.0 for k, v in B.items() if k != ((2, 2, 2), ()))
    T = simulate.theoretical_polyspectra(spec, 4)
    for L in (0, 2, 4):
        ref = math.sqrt(2 * L + 1) * wigner.wigner_3j_zero(2, 2, L) ** 2 * 6.0
        assert T[((2, 2, 2, 2), (L,))] == pytest.approx(ref, abs=1e-14)
    with pytest.raises(ValueError):
        simulate.theoretical_polyspectra(spec, 5)


def test_rotation_leaves_power_spectrum_unchanged():
    rng = np.random.default_rng(7)
    c = simulate.gaussian_coefficients(h.AngularPowerSpectrum(np.ones(17)), rng)
    for _ in range(5):
        r = simulate.isotropize(c, rng)
        assert np.abs(r.power() - c.power()).max() < 1e-12


def test_config_validation_and_round_trip():
    with pytest.raises(ValueError):
        simulate.SimulationConfig(F, 0)
    with pytest.raises(ValueError):
        simulate.SimulationConfig(F, 3, -1)
    with pytest.raises(ValueError):
        simulate.SimulationConfig(F, 3, lmax=9)
    with pytest.raises(ValueError):
        simulate.BaseArraySpec((1.0,), "cauchy")
    spec = simulate.BaseArraySpec((1.0, 2.0), "centered_gamma", shape=2.0, nongaussian_degrees={1})
    for cfg in (simulate.SimulationConfig(F, 3, 1, lmax=2), simulate.SimulationConfig(spec, 4, 9)):
        again = simulate.SimulationConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again.to_dict() == cfg.to_dict()


def test_truncated_lmax():
    e = simulate.run_ensemble(simulate.SimulationConfig(F, 2, 0, lmax=1))
    assert e.lmax == 1


def test_ensemble_files_round_trip(tmp_path):
    spec = simulate.BaseArraySpec((1.0, 1.0, 1.0), "centered_exponential")
    e = simulate.run_ensemble(simulate.SimulationConfig(spec, 5, 2))
    iso_io.write_ensemble(e, tmp_path)
    back = iso_io.read_ensemble(tmp_path)
    for a, b in zip(e.replicates, back.replicates):
        assert np.array_equal(a.z, b.z)
    assert [simulate.coeff_checksum(r) for r in back.replicates] == e.metadata["checksums"]
    (tmp_path / "replicate_00003.csv").unlink()
    with pytest.raises(iso_io.EnsembleFormatError, match="replicate_00003"):
        iso_io.read_ensemble(tmp_path)


def test_spectrum_and_curve_csv_round_trip(tmp_path):
    f = h.AngularPowerSpectrum([1 / 3, 1 / 7, 1e-300])
    iso_io.write_spectrum_csv(f, tmp_path / "f.csv")
    assert np.array_equal(iso_io.read_spectrum_csv(tmp_path / "f.csv").f, f.f)
    x = np.linspace(0, np.pi, 7)
    iso_io.write_curve_csv(x, np.sin(x), tmp_path / "c.csv")
    xb, yb = iso_io.read_curve_csv(tmp_path / "c.csv")
    assert np.array_equal(xb, x) and np.array_equal(yb, np.sin(x))


def test_gaussian_pipeline_bispectrum_consistent_with_zero():
    e = simulate.run_ensemble(simulate.SimulationConfig(F, 400, 3))
    B = spectra.polyspectrum_estimate(3, e)
    z = [abs(v) / B.se[k] for k, v in B.items()]
    assert max(z) < 4.5
