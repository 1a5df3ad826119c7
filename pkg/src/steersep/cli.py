"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 iteration budget exceeded,
4 invariant violation or failed check.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction

import numpy as np

from .constants import (
    BURES_SEPARABILITY,
    HS_ABS_SEPARABILITY,
    HS_SEPARABILITY,
    ORDERED_ABS_SEP_VOLUME,
    ORDERED_CHAMBER_VOLUME,
)
from .errors import DomainError, IterationBudgetExceeded, InvariantViolation
from .estimator import estimate_ordered_spectra_abs_sep, ordered_abs_sep_volume
from .moments import MomentParams, f2_prime_hyp, f2_prime_sum, g_factor, render_decimal
from .runner import MEASURES, RunConfig, default_workers, run_experiment
from .sampling import GINIBRE, PAPER, RandomStream, SamplerConfig
from .validate import format_checks, run_validation

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_INVARIANT = 0, 2, 3, 4
SAMPLERS = {"paper": PAPER, "ginibre-hs": GINIBRE}


def count(text: str) -> int:
    """Accept ``300000000``, ``3e8`` or ``3_000_000``."""
    try:
        value = float(text.replace("_", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a count: {text!r}")
    if value != int(value) or value < 1:
        raise argparse.ArgumentTypeError(f"count must be a positive integer: {text!r}")
    return int(value)


def rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def measure_list(text: str):
    items = tuple(x.strip() for x in text.split(",") if x.strip())
    bad = [x for x in items if x not in MEASURES]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"measures must be drawn from {','.join(MEASURES)}")
    return items


def build_parser():
    p = argparse.ArgumentParser(prog="steersep", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="Monte Carlo separability ratios")
    r.add_argument("--iterations", type=count, default=10**7, help="candidates (paper) or states (ginibre-hs)")
    r.add_argument("--sampler", choices=sorted(SAMPLERS), default="paper")
    r.add_argument("--cutoff", type=rational, default=Fraction(4, 15),
                   help="off-diagonal half-width, e.g. 4/15 (default)")
    r.add_argument("--measures", type=measure_list, default=MEASURES, help="comma list of hs,qse,qse_alt,bures")
    r.add_argument("--bins", type=int, default=20)
    r.add_argument("--batches", type=int, default=100)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--workers", type=int, default=None,
                   help="independent streams (default $STEERSEP_WORKERS or 1); results depend on it")
    r.add_argument("--processes", type=int, default=None,
                   help="parallel processes (default: workers); results do not depend on it")
    r.add_argument("--out-summary", default="summary.json")
    r.add_argument("--out-curve", default=None)
    r.add_argument("--out-samples", default=None)
    r.add_argument("--progress", action="store_true")

    m = sub.add_parser("moments", help="exact determinant-difference moments F2(n, k)")
    m.add_argument("--n-max", type=int, default=4)
    m.add_argument("--k-max", type=int, default=2)
    m.add_argument("--alphas", default="1,2,4", help="comma list of rationals, e.g. 1/2,1,2")
    m.add_argument("--digits", type=int, default=17)
    m.add_argument("--format", choices=("text", "csv", "json"), default="text")

    s = sub.add_parser("spectra", help="absolute separability over flat ordered spectra")
    s.add_argument("--samples", type=count, default=10**7)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--grid", type=int, default=2000, help="quadrature grid for the deterministic oracle")

    v = sub.add_parser("validate", help="invariant battery")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--states", type=count, default=10_000, help="Ginibre states to check")
    v.add_argument("--paper-states", type=count, default=1_000, help="rejection-sampler states to check")
    return p


def _dump_violation(exc: InvariantViolation):
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if exc.matrix is not None:
        m = np.asarray(exc.matrix)
        payload["matrix_real"] = m.real.tolist()
        payload["matrix_imag"] = m.imag.tolist()
    print(json.dumps(payload), file=sys.stderr)


def cmd_run(args):
    workers = args.workers if args.workers is not None else default_workers()
    sampler = SamplerConfig(kind=SAMPLERS[args.sampler], cutoff=args.cutoff, seed=args.seed, workers=workers)
    cfg = RunConfig(
        iterations=args.iterations,
        sampler=sampler,
        measures=args.measures,
        bins=args.bins,
        batches=args.batches,
        processes=args.processes if args.processes is not None else workers,
    )
    _, summary = run_experiment(cfg, args.out_summary, args.out_curve, args.out_samples, progress=args.progress)
    parts = [f"{summary['feasible']:,}/{summary['iterations']:,} feasible"]
    for name, est in summary["ratios"].items():
        parts.append(f"{name}={est['estimate']:.6g}±{est['std_error']:.2g}")
    print("  ".join(parts))
    print(f"reference: hs 8/33={float(HS_SEPARABILITY):.6f}  bures 25/341={float(BURES_SEPARABILITY):.7f}  "
          f"hs abs-sep {HS_ABS_SEPARABILITY:.8f}")
    return EXIT_OK


def moment_rows(n_max, k_max, alphas):
    """``(n, k, alpha, F2)`` rows; raises ArithmeticError if the two F2' forms disagree."""
    rows = []
    for alpha in alphas:
        for k in range(k_max + 1):
            for n in range(n_max + 1):
                p = MomentParams(n, k, alpha)
                s, h = f2_prime_sum(p), f2_prime_hyp(p)
                if s != h:
                    raise ArithmeticError(f"F2' forms disagree at n={n} k={k} alpha={alpha}: {s} vs {h}")
                rows.append((n, k, p.alpha, g_factor(p) * s))
    return rows


def cmd_moments(args):
    if args.n_max < 0 or args.k_max < 0:
        raise DomainError("--n-max and --k-max must be nonnegative")
    alphas = [Fraction(a) for a in args.alphas.split(",") if a.strip()]
    try:
        rows = moment_rows(args.n_max, args.k_max, alphas)
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    if args.format == "json":
        print(json.dumps([{"n": n, "k": k, "alpha": str(a), "fraction": str(v),
                           "decimal": render_decimal(v, args.digits)} for n, k, a, v in rows], indent=2))
    elif args.format == "csv":
        w = csv.writer(sys.stdout)
        w.writerow(("n", "k", "alpha", "fraction", "decimal"))
        for n, k, a, v in rows:
            w.writerow((n, k, a, v, render_decimal(v, args.digits)))
    else:
        for n, k, a, v in rows:
            print(f"n={n:<3d} k={k:<3d} alpha={str(a):<5s} F2={str(v):<40s} {render_decimal(v, args.digits)}")
    return EXIT_OK


def cmd_spectra(args):
    p, se = estimate_ordered_spectra_abs_sep(RandomStream(args.seed, 0), args.samples)
    vol = ordered_abs_sep_volume(args.grid)
    prob = vol / ORDERED_CHAMBER_VOLUME
    ref_prob = ORDERED_ABS_SEP_VOLUME / ORDERED_CHAMBER_VOLUME
    print(f"monte carlo fraction      {p:.8f} ± {se:.2e}  (n={args.samples:,})")
    print(f"quadrature fraction       {prob:.8f}  (volume {vol:.10f})")
    print(f"closed-form volume        {ORDERED_ABS_SEP_VOLUME:.10f}  -> fraction {ref_prob:.8f}")
    print(f"MC vs quadrature          {(p - prob) / se:+.2f} sigma")
    print(f"MC vs closed form as a probability  {(p - ORDERED_ABS_SEP_VOLUME) / se:+.1f} sigma")
    print(f"MC vs closed form as a volume       {(p - ref_prob) / se:+.2f} sigma")
    return EXIT_OK


def cmd_validate(args):
    checks = run_validation(args.seed, args.states, args.paper_states)
    print(format_checks(checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_INVARIANT


COMMANDS = {"run": cmd_run, "moments": cmd_moments, "spectra": cmd_spectra, "validate": cmd_validate}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except IterationBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InvariantViolation as exc:
        _dump_violation(exc)
        return EXIT_INVARIANT
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
