"""``isospec`` command line.

Exit codes: 0 success, 1 verification failure, 2 usage or config error, 3 I/O error.
Every command writes ``report.json`` into its output directory.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io as iso_io
from . import models, simulate, spectra, verify, wigner
from .harmonics import NotPositiveDefiniteError

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
GAMMA_POINTS = 512
REPORT = "report.json"


class UsageError(Exception):
    pass


def _threads(arg: int | None) -> int:
    if arg is not None:
        n = arg
    else:
        env = os.environ.get("ISOSPEC_THREADS")
        if env is None:
            return 1
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"ISOSPEC_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise UsageError("thread count must be at least 1")
    return n


def _load_json(path: str | None, what: str) -> tuple[dict, str]:
    if path is None:
        raise UsageError(f"--config is required for {what}")
    text = Path(path).read_text()
    try:
        return json.loads(text), hashlib.sha256(text.encode()).hexdigest()
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None


def _out_dir(path: str | None, default: str) -> Path:
    d = Path(path or default)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_report(out: Path, argv, config_hash, t0, files, checks=None, extra=None) -> Path:
    rep = {
        "command": list(argv),
        "config_hash": config_hash,
        "timing_seconds": time.perf_counter() - t0,
        "outputs": [str(f) for f in files],
    }
    if checks is not None:
        rep["checks"] = checks
        rep["passed"] = all(c["passed"] for c in checks)
    rep.update(extra or {})
    p = out / REPORT
    p.write_text(json.dumps(rep, indent=1, sort_keys=True, default=float))
    return p


# ---------------------------------------------------------------------------

def cmd_models(a, argv) -> int:
    t0 = time.perf_counter()
    desc, h = _load_json(a.config, "models")
    lmax = 16 if a.lmax is None else a.lmax
    if lmax < 0:
        raise UsageError("--lmax must be nonnegative")
    model = models.model_from_dict(desc)
    try:
        f = models.model_spectrum(model, lmax)
    except NotPositiveDefiniteError as exc:
        raise UsageError(f"{desc['variant']} parameters {model.params()} give {exc}") from None
    gamma = np.linspace(0.0, np.pi, GAMMA_POINTS)
    C = np.asarray(model.covariance(gamma), dtype=float)
    out = _out_dir(a.out, "isospec_models")
    files = [out / "spectrum.csv", out / "covariance.csv"]
    iso_io.write_spectrum_csv(f, files[0])
    iso_io.write_curve_csv(gamma, C, files[1])
    _write_report(out, argv, h, t0, files, extra={"model": model.to_dict()})
    return EXIT_OK


def cmd_simulate(a, argv) -> int:
    t0 = time.perf_counter()
    d, h = _load_json(a.config, "simulate")
    if not isinstance(d, dict) or "spec" not in d or "n_replicates" not in d:
        raise UsageError("simulation config needs 'spec' and 'n_replicates'")
    d = dict(d)
    if a.seed is not None:
        d["master_seed"] = a.seed
    if a.lmax is not None:
        d["lmax"] = a.lmax
    cfg = simulate.SimulationConfig.from_dict(d)
    threads = _threads(a.threads)
    e = simulate.run_ensemble(cfg, threads=threads)
    out = _out_dir(a.out, "isospec_ensemble")
    files = iso_io.write_ensemble(e, out, extra={"timing_seconds": time.perf_counter() - t0})
    _write_report(out, argv, h, t0, files)
    return EXIT_OK


def cmd_estimate(a, argv) -> int:
    t0 = time.perf_counter()
    try:
        e = iso_io.read_ensemble(a.ensemble)
    except iso_io.EnsembleFormatError as exc:
        raise UsageError(str(exc)) from None
    lmax = e.lmax if a.lmax is None else a.lmax
    if not 0 <= lmax <= e.lmax:
        raise UsageError(f"--lmax must lie in [0, {e.lmax}]")
    for p in a.p:
        if p not in (3, 4, 5):
            raise UsageError(f"order p must be 3, 4 or 5, got {p}")
        if len(e) < p + 1:
            raise UsageError(f"order {p} needs at least {p + 1} replicates, got {len(e)}")
    out = _out_dir(a.out, "isospec_estimate")
    files = [out / "power_spectrum.csv"]
    iso_io.write_spectrum_csv(spectra.power_spectrum_estimate(e), files[0])
    for p in a.p:
        S = spectra.polyspectrum_estimate(p, e, lmax)
        path = out / f"polyspectrum_p{p}.json"
        path.write_text(S.to_json())
        files.append(path)
    h = hashlib.sha256(json.dumps(e.metadata, sort_keys=True, default=str).encode()).hexdigest()
    _write_report(out, argv, h, t0, files, extra={"n_replicates": len(e), "lmax": lmax})
    return EXIT_OK


def cmd_verify(a, argv) -> int:
    t0 = time.perf_counter()
    results, findings = verify.run_checks(a.level)
    out = _out_dir(a.out, "isospec_verify")
    checks = [r.to_dict() for r in results]
    h = hashlib.sha256(a.level.encode()).hexdigest()
    _write_report(out, argv, h, t0, [], checks=checks, extra={"level": a.level, "findings": findings})
    failed = [r.name for r in results if not r.passed]
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} residual={r.residual:.3g} tol={r.tolerance:.3g}")
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_wigner3j(a, argv) -> int:
    t0 = time.perf_counter()
    lmax = 4 if a.lmax is None else a.lmax
    if not 0 <= lmax <= wigner.LMAX_SUPPORTED:
        raise UsageError(f"--lmax must lie in [0, {wigner.LMAX_SUPPORTED}]")
    out = _out_dir(a.out, "isospec_wigner3j")
    path = out / "wigner3j.csv"
    with open(path, "w") as fh:
        fh.write("l1,l2,l3,m1,m2,m3,value\n")
        for l1 in range(lmax + 1):
            for l2 in range(lmax + 1):
                for l3 in range(abs(l1 - l2), min(l1 + l2, lmax) + 1):
                    for m1 in range(-l1, l1 + 1):
                        for m2 in range(-l2, l2 + 1):
                            m3 = -m1 - m2
                            if abs(m3) > l3:
                                continue
                            v = wigner.wigner_3j(l1, l2, l3, m1, m2, m3)
                            fh.write(f"{l1},{l2},{l3},{m1},{m2},{m3},{iso_io.FMT.format(v)}\n")
    _write_report(out, argv, None, t0, [path])
    return EXIT_OK


# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="isospec", description="Isotropic spherical random fields: spectra, simulation, estimation.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="JSON input file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--lmax", type=int)
        p.add_argument("--threads", type=int, help="worker cap (fallback: ISOSPEC_THREADS)")

    p = sub.add_parser("models", help="tabulate a covariance model's spectrum and covariance curve")
    common(p)
    p.set_defaults(func=cmd_models)

    p = sub.add_parser("simulate", help="generate a replicate ensemble")
    common(p)
    p.add_argument("--seed", type=int, help="overrides master_seed in the config")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate power spectrum and polyspectra from an ensemble")
    common(p, config=False)
    p.add_argument("ensemble", help="ensemble directory written by 'simulate'")
    p.add_argument("--p", type=int, nargs="*", default=[3], help="polyspectrum orders; empty for the power spectrum only")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("verify", help="run the identity suite")
    common(p, config=False)
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("wigner3j", help="dump 3j symbols up to --lmax as CSV")
    common(p, config=False)
    p.set_defaults(func=cmd_wigner3j)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        a = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _threads(a.threads)
        return a.func(a, argv)
    except (UsageError, models.ModelParameterError, NotPositiveDefiniteError, ValueError, KeyError, TypeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"isospec: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"isospec: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
