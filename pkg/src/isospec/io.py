"""CSV and JSON readers and writers for coefficients, maps, spectra and ensembles."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .harmonics import AngularPowerSpectrum, HarmonicCoeffs, SphereMap
from .spectra import CoeffEnsemble

__all__ = [
    "FMT",
    "write_coeffs_csv",
    "read_coeffs_csv",
    "write_spectrum_csv",
    "read_spectrum_csv",
    "write_map_csv",
    "write_curve_csv",
    "read_curve_csv",
    "write_ensemble",
    "read_ensemble",
    "EnsembleFormatError",
]

FMT = "{:.17g}"
MANIFEST = "manifest.json"


class EnsembleFormatError(ValueError):
    """Replicate files are missing or inconsistent with the manifest."""


def _fmt(x: float) -> str:
    return FMT.format(float(x))


def write_coeffs_csv(c: HarmonicCoeffs, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["l", "m", "re", "im"])
        for l in range(c.lmax + 1):
            for m in range(l + 1):
                v = c.z[l, m]
                w.writerow([l, m, _fmt(v.real), _fmt(v.imag)])


def read_coeffs_csv(path) -> HarmonicCoeffs:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no coefficient rows")
    lmax = max(int(r["l"]) for r in rows)
    z = np.zeros((lmax + 1, lmax + 1), complex)
    for r in rows:
        l, m = int(r["l"]), int(r["m"])
        if not 0 <= m <= l:
            raise ValueError(f"{path}: invalid order m={m} at l={l}")
        z[l, m] = float(r["re"]) + 1j * float(r["im"])
    return HarmonicCoeffs(lmax, z)


def write_spectrum_csv(f: AngularPowerSpectrum, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["l", "f"])
        for l, v in enumerate(f.f):
            w.writerow([l, _fmt(v)])


def read_spectrum_csv(path) -> AngularPowerSpectrum:
    with open(path, newline="") as fh:
        rows = sorted(csv.DictReader(fh), key=lambda r: int(r["l"]))
    return AngularPowerSpectrum([float(r["f"]) for r in rows])


def write_map_csv(m: SphereMap, path) -> None:
    g = m.grid
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "phi", "value"])
        for i, th in enumerate(g.colatitudes):
            for j, ph in enumerate(g.longitudes):
                w.writerow([_fmt(th), _fmt(ph), _fmt(m.values[i, j])])


def write_curve_csv(x, y, path, names=("gamma", "C")) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(names))
        for a, b in zip(x, y):
            w.writerow([_fmt(a), _fmt(b)])


def read_curve_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def _replicate_name(i: int) -> str:
    return f"replicate_{i:05d}.csv"


def write_ensemble(e: CoeffEnsemble, directory, extra: dict | None = None) -> list[Path]:
    """Write one coefficient CSV per replicate plus ``manifest.json``; returns written paths."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, c in enumerate(e.replicates):
        p = d / _replicate_name(i)
        write_coeffs_csv(c, p)
        paths.append(p)
    manifest = dict(e.metadata)
    manifest.update(extra or {})
    manifest["n_replicates"] = len(e)
    manifest["lmax"] = e.lmax
    manifest["files"] = [p.name for p in paths]
    mp = d / MANIFEST
    mp.write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return paths + [mp]


def read_ensemble(directory) -> CoeffEnsemble:
    d = Path(directory)
    mp = d / MANIFEST
    if not mp.is_file():
        raise EnsembleFormatError(f"{mp} not found")
    try:
        manifest = json.loads(mp.read_text())
    except json.JSONDecodeError as exc:
        raise EnsembleFormatError(f"{mp}: {exc}") from None
    files = manifest.get("files")
    if not isinstance(files, list) or not files:
        raise EnsembleFormatError("manifest lists no replicate files")
    reps = []
    for name in files:
        p = d / name
        if not p.is_file():
            raise EnsembleFormatError(f"missing replicate file {p}")
        try:
            reps.append(read_coeffs_csv(p))
        except (ValueError, KeyError) as exc:
            raise EnsembleFormatError(f"{p}: {exc}") from None
    if len({r.lmax for r in reps}) != 1:
        raise EnsembleFormatError("replicates have different band limits")
    if "lmax" in manifest and reps[0].lmax != manifest["lmax"]:
        raise EnsembleFormatError("replicate band limit disagrees with manifest")
    return CoeffEnsemble(tuple(reps), manifest)
