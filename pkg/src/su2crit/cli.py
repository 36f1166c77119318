"""Command-line front end.

Verbs: density (CSV curve), simulate (JSON histogram report), compare
(JSON statistical verdict), selftest (oracle identity table).  Identical
flags always produce byte-identical output; exit codes are 0 for
success, 1 for a statistical or identity failure, 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .kacrice import MODEL_TAGS, DensityModel, evaluate_model
from .montecarlo import (ExperimentConfig, SimulationError, compare,
                         run_trials)
from .quadrature import QuadratureError
from .selftest import run_selftest

_DEGREE_TAGS = ("exact", "unsimplified", "modulus_exact")


class UsageError(Exception):
    pass


def _jsonable(obj):
    """Mapped to plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _model_from_flags(tag: str, n: int | None) -> DensityModel:
    if tag not in MODEL_TAGS:
        raise UsageError(f"unknown model tag {tag!r}")
    if tag in _DEGREE_TAGS:
        if n is None:
            raise UsageError(f"model {tag!r} requires --n")
        return DensityModel(tag, n)
    return DensityModel(tag)


def cmd_density(args) -> int:
    model_n = args.n if args.model in _DEGREE_TAGS else None
    model = _model_from_flags(args.model, model_n)
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    if args.r_max < args.r_min:
        raise UsageError("--r-max must be >= --r-min")
    grid = np.linspace(args.r_min, args.r_max, args.steps)
    lines = ["r,density"]
    for r in grid:
        d = evaluate_model(model, float(r), args.tol)
        lines.append(f"{float(r):.17g},{d:.17g}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _histogram_payload(config: ExperimentConfig, hist, diag) -> dict:
    return {
        "schema": 1,
        "version": __version__,
        "config": {
            "n": config.n,
            "trials": config.trials,
            "master_seed": config.master_seed,
            "bins": int(config.bin_edges.size - 1),
            "max_radius": config.max_radius,
            "workers": config.workers,
        },
        "histogram": {
            "bin_edges": hist.bin_edges,
            "count_sums": hist.count_sums,
            "countsq_sums": hist.countsq_sums,
            "mean_counts": hist.mean_counts(),
            "variance_counts": hist.variance_counts(),
            "overflow_mean": hist.overflow_mean(),
            "trials_accepted": hist.trials_accepted,
            "trials_rejected": hist.trials_rejected,
        },
        "diagnostics": {
            "reject_reasons": diag.reject_reasons,
            "max_residual": diag.max_residual,
            "max_vieta_sum_rel": diag.max_vieta_sum_rel,
            "max_vieta_prod_rel": diag.max_vieta_prod_rel,
            "max_iterations": diag.max_iterations,
        },
    }


def _experiment_config(args) -> ExperimentConfig:
    if args.bins < 1:
        raise UsageError("--bins must be >= 1")
    if args.max_radius <= 0.0:
        raise UsageError("--max-radius must be positive")
    edges = np.linspace(0.0, args.max_radius, args.bins + 1)
    try:
        return ExperimentConfig(n=args.n, trials=args.trials,
                                master_seed=args.seed, bin_edges=edges,
                                workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_simulate(args) -> int:
    config = _experiment_config(args)
    hist, diag = run_trials(config)
    payload = _histogram_payload(config, hist, diag)
    payload["command"] = "simulate"
    _emit(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n",
          args.out)
    return 0


def cmd_compare(args) -> int:
    config = _experiment_config(args)
    model_n = args.model_n
    if args.model in _DEGREE_TAGS and model_n is None:
        model_n = args.n
    model = _model_from_flags(args.model, model_n)
    hist, diag = run_trials(config)
    report = compare(hist, model,
                     allow_degree_mismatch=model.n != config.n)
    payload = _histogram_payload(config, hist, diag)
    payload["command"] = "compare"
    payload["config"]["model"] = model.tag
    payload["config"]["model_n"] = model.n
    payload["comparison"] = {
        "expected_mean": report.expected_mean,
        "observed_mean": report.observed_mean,
        "z_scores": report.z_scores,
        "max_abs_z": report.max_abs_z,
        "chi_square": report.chi_square,
        "scored_bins": report.scored_bins,
        "shape_failures": report.shape_failures,
        "gating": report.gating,
        "passed": report.passed,
    }
    _emit(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n",
          args.out)
    if not report.passed:
        offending = [int(i) for i in
                     np.flatnonzero(np.abs(np.nan_to_num(
                         report.z_scores)) > 5.0)]
        print(f"statistical gate failed: max |z| = {report.max_abs_z:.3f} "
              f"in bins {offending}; replay with --seed {config.master_seed}",
              file=sys.stderr)
        return 1
    return 0


def cmd_selftest(args) -> int:
    results = run_selftest(full=args.full)
    width = max(len(r.name) for r in results)
    failures = []
    for r in results:
        verdict = "PASS" if r.passed else "FAIL"
        print(f"{r.name:{width}s}  {r.residual:11.3e} <= "
              f"{r.tolerance:8.0e}  {verdict}")
        if not r.passed:
            failures.append(r.name)
    if failures:
        print("failed identities: " + ", ".join(failures), file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="su2crit",
        description="Critical values of random SU(2) polynomials: "
                    "analytic radial densities vs Monte Carlo.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("density", help="write an analytic density curve "
                                       "as CSV (header r,density)")
    p.add_argument("--model", required=True, choices=sorted(MODEL_TAGS))
    p.add_argument("--n", type=int, default=None,
                   help="polynomial degree (degree-tagged models)")
    p.add_argument("--r-min", type=float, default=0.0)
    p.add_argument("--r-max", type=float, default=5.0)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--tol", type=float, default=1e-10,
                   help="quadrature relative tolerance")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.set_defaults(func=cmd_density)

    for verb, func in (("simulate", cmd_simulate), ("compare", cmd_compare)):
        p = sub.add_parser(verb)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--trials", type=int, required=True)
        p.add_argument("--seed", type=int, default=20260816,
                       help="master seed for the per-trial substreams")
        p.add_argument("--bins", type=int, default=60)
        p.add_argument("--max-radius", type=float, default=6.0)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", default=None)
        if verb == "compare":
            p.add_argument("--model", default="exact",
                           choices=sorted(MODEL_TAGS))
            p.add_argument("--model-n", type=int, default=None,
                           help="density degree override (sensitivity "
                                "studies); defaults to --n")
        p.set_defaults(func=func)

    p = sub.add_parser("selftest", help="run the oracle identity suite")
    p.add_argument("--full", action="store_true",
                   help="include the slow large-degree checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return 1
    except QuadratureError as exc:
        print(f"quadrature failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
