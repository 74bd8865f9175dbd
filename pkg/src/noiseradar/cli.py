"""Command-line front end: figure data as CSV plus a JSON run manifest.

Exit codes: 0 success, 1 validation failure, 2 usage or domain error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import DomainError, QuadratureError
from .montecarlo import NULL, ALT, TrialPlan, roc_from_samples, sample_power_and_correlation
from .roc import (PATH_QUADRATURE, RangeModel, default_pfa_grid, kappa_grid, pd_vs_kappa,
                  rho_of_range, roc_approx_clt, roc_exact)
from .signal_model import CovarianceSpec
from .validation import DEFAULT_SEED, run_all
from .vgamma import d0_general_law, detector_law, vg_pdf

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
SIGNS = ("qtms", "noise_radar")


class UsageError(Exception):
    pass


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _manifest_path(out: str, explicit: str | None) -> Path | None:
    if explicit:
        return Path(explicit)
    if out in (None, "-"):
        return None
    return Path(out).with_suffix(".manifest.json")


def _emit(args, header, rows, fallbacks=()):
    text = _csv_text(header, rows)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    target = _manifest_path(args.out, args.manifest)
    if target is not None:
        manifest = {
            "command": args.command,
            "parameters": _parameters(args),
            "seed": int(args.seed),
            "tool_version": __version__,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
            "fallbacks_used": list(fallbacks),
            "data_file": None if args.out in (None, "-") else Path(args.out).name,
        }
        target.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _parameters(args) -> dict:
    skip = {"handler", "command", "out", "manifest"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _fallbacks(curve, **context):
    if not curve.paths:
        return []
    return [dict(context, pfa=float(p), path=path)
            for p, path in zip(curve.pfa, curve.paths) if path != PATH_QUADRATURE]


def _histogram_density(samples, x):
    """Density estimate on bins centred at the grid points."""
    mids = (x[1:] + x[:-1]) / 2
    edges = np.concatenate([[x[0] - (x[1] - x[0]) / 2], mids, [x[-1] + (x[-1] - x[-2]) / 2]])
    counts, _ = np.histogram(samples, edges)
    return counts / (samples.size * np.diff(edges))


def cmd_pdf(args):
    if args.points < 2 or not args.x_max > args.x_min:
        raise UsageError("need --points >= 2 and --x-max > --x-min")
    scale_flags = (args.sigma1, args.sigma2, args.phi)
    if args.general:
        if args.kappa not in (None, 0.0):
            raise UsageError("--general describes D_0; --kappa must be omitted or 0")
        kappa = 0.0
        s1, s2, phi = (1.0 if v is None else v for v in scale_flags)
        cov = CovarianceSpec(s1, s2, args.rho, phi, args.sign)
        law = d0_general_law(cov, args.n)
    else:
        if any(v is not None for v in scale_flags):
            raise UsageError("--sigma1, --sigma2 and --phi require --general")
        kappa = 0.0 if args.kappa is None else args.kappa
        s1 = s2 = 1.0
        phi = 0.0
        law = detector_law(args.rho, kappa, args.n)
    x = np.linspace(args.x_min, args.x_max, args.points)
    columns = [x, vg_pdf(x, law)]
    header = ["x", "pdf_analytic"]
    if args.mc_trials:
        plan = TrialPlan.simple(args.rho, kappa, args.n, args.mc_trials, args.seed,
                                args.sign, s1, s2, phi)
        ptot, corr = sample_power_and_correlation(plan, ALT, args.workers)
        columns.append(_histogram_density(corr - kappa * ptot / 2, x))
        header.append("pdf_empirical")
    _emit(args, header, zip(*columns))


def cmd_roc(args):
    methods = ["exact", "approx", "empirical"] if args.method == "all" else [args.method]
    if args.method == "empirical" and not args.trials:
        raise UsageError("--method empirical requires --trials")
    if args.method == "all" and not args.trials:
        methods.remove("empirical")
    grid = default_pfa_grid(args.pfa_points, args.pfa_min, args.pfa_max)
    samples = None
    if "empirical" in methods:
        plan = TrialPlan.simple(args.rho, 0.0, args.n, args.trials, args.seed, args.sign)
        samples = (sample_power_and_correlation(plan, NULL, args.workers),
                   sample_power_and_correlation(plan, ALT, args.workers))
    rows, fallbacks = [], []
    for kappa in args.kappa:
        for method in methods:
            if method == "exact":
                curve = roc_exact(args.rho, kappa, args.n, grid)
                fallbacks += _fallbacks(curve, kappa=kappa)
                pd, err = curve.pd, [None] * grid.size
            elif method == "approx":
                pd, err = roc_approx_clt(args.rho, kappa, args.n, grid), [None] * grid.size
            else:
                (p0, c0), (p1, c1) = samples
                curve = roc_from_samples(c0 - kappa * p0 / 2, c1 - kappa * p1 / 2, grid)
                pd, err = curve.pd, curve.stderr
            rows += [(p, d, method, kappa, e) for p, d, e in zip(grid, pd, err)]
    _emit(args, ["pfa", "pd", "method", "kappa", "stderr"], rows, fallbacks)


def cmd_sweep_kappa(args):
    if not args.kappa_step > 0:
        raise UsageError("--kappa-step must be positive")
    if not 0 <= args.kappa_max < 1:
        raise UsageError("--kappa-max must lie in [0, 1)")
    if not 0 < args.pfa < 1:
        raise UsageError("--pfa must lie in (0, 1)")
    ks = kappa_grid(args.kappa_step, args.kappa_max)
    rows = []
    for n in args.n:
        sweep = pd_vs_kappa(args.rho, n, args.pfa, ks)
        rows += [(k, n, q, p, "data") for k, q, p in zip(ks, sweep.normalized_pd, sweep.pd)]
        best = int(np.argmax(sweep.pd))
        rows.append((sweep.argmax, n, sweep.normalized_pd[best], sweep.pd[best], "argmax"))
    _emit(args, ["kappa", "n", "pd_normalized", "pd", "kind"], rows)


def cmd_range(args):
    model = RangeModel(args.rho0, args.rc)
    if args.points < 1 or args.r_max < 0:
        raise UsageError("need --points >= 1 and --r-max >= 0")
    if not 0 < args.pfa < 1:
        raise UsageError("--pfa must lie in (0, 1)")
    r = np.linspace(0.0, args.r_max, args.points)
    rho = np.atleast_1d(rho_of_range(model, r))
    detectors = ["optimal", "d0"] if args.detector == "both" else [args.detector]
    rows, fallbacks = [], []
    for det in detectors:
        for ri, p in zip(r, rho):
            kappa = float(p) if det == "optimal" else 0.0
            curve = roc_exact(float(p), kappa, args.n, [args.pfa])
            fallbacks += _fallbacks(curve, range=float(ri), detector=det)
            rows.append((ri, p, curve.pd[0], det))
    _emit(args, ["range", "rho", "pd", "detector"], rows, fallbacks)


def cmd_validate(args):
    results = run_all(args.quick, args.seed)
    report = {
        "passed": all(r.passed for r in results),
        "quick": bool(args.quick),
        "seed": int(args.seed),
        "tool_version": __version__,
        "checks": [r.as_dict() for r in results],
    }
    text = json.dumps(report, indent=2, default=_json_default) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _add_common(p, data=True):
    p.add_argument("--config", help="JSON file of flag values; command-line flags win")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", help="output path (default: stdout)")
    if data:
        p.add_argument("--manifest", help="manifest path (default: next to --out)")
        p.add_argument("--workers", type=int, default=1, help="threads for Monte Carlo")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noiseradar",
                                     description="Exact detector laws and ROC curves for noise-type radar.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pdf", help="density of the detector statistic")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--kappa", type=float)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--x-min", type=float, default=-2.0)
    p.add_argument("--x-max", type=float, default=2.0)
    p.add_argument("--points", type=int, default=1001)
    p.add_argument("--mc-trials", type=int)
    p.add_argument("--general", action="store_true", help="D_0 under (sigma1, sigma2, rho, phi)")
    p.add_argument("--sigma1", type=float)
    p.add_argument("--sigma2", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--sign", choices=SIGNS, default="qtms")
    _add_common(p)
    p.set_defaults(handler=cmd_pdf)

    p = sub.add_parser("roc", help="ROC curves")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--kappa", type=float, nargs="+", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=("exact", "approx", "empirical", "all"), default="exact")
    p.add_argument("--pfa-min", type=float, default=1e-4)
    p.add_argument("--pfa-max", type=float, default=1.0)
    p.add_argument("--pfa-points", type=int, default=60)
    p.add_argument("--trials", type=int)
    p.add_argument("--sign", choices=SIGNS, default="qtms")
    _add_common(p)
    p.set_defaults(handler=cmd_roc)

    p = sub.add_parser("sweep-kappa", help="normalized pd across kappa")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--pfa", type=float, required=True)
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--kappa-step", type=float, default=0.01)
    p.add_argument("--kappa-max", type=float, default=0.99)
    _add_common(p)
    p.set_defaults(handler=cmd_sweep_kappa)

    p = sub.add_parser("range", help="pd against target range")
    p.add_argument("--rho0", type=float, required=True)
    p.add_argument("--rc", type=float, required=True)
    p.add_argument("--r-max", type=float, required=True)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--pfa", type=float, required=True)
    p.add_argument("--detector", choices=("optimal", "d0", "both"), default="optimal")
    _add_common(p)
    p.set_defaults(handler=cmd_range)

    p = sub.add_parser("validate", help="run the acceptance checks")
    p.add_argument("--quick", action="store_true", help="10^4 trials, wider tolerances")
    _add_common(p, data=False)
    p.set_defaults(handler=cmd_validate)
    return parser


def _subparser(parser, command):
    action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return action.choices.get(command)


def _apply_config(parser, argv):
    """Parse with config-file values as defaults, so explicit flags win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    sub = _subparser(parser, known.command)
    if not known.config or sub is None:
        return parser.parse_args(argv)
    try:
        values = json.loads(Path(known.config).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from exc
    if not isinstance(values, dict):
        raise UsageError("config file must hold a JSON object")
    dests = {a.dest for a in sub._actions} - {"config", "help"}
    defaults = {}
    for key, value in values.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in dests:
            raise UsageError(f"unknown config key {key!r} for {known.command}")
        defaults[dest] = value
    for action in sub._actions:
        if action.dest in defaults:
            action.required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        code = args.handler(args)
        return EXIT_OK if code is None else code
    except UsageError as exc:
        print(f"noiseradar: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"noiseradar: domain error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QuadratureError as exc:
        print(f"noiseradar: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
