"""Command-line front end: one subcommand per named experiment."""

from __future__ import annotations

import argparse
import json
import sys

from .analytic import DomainError
from .census import (
    EXIT_INCONCLUSIVE,
    EXIT_PRECONDITION,
    EXIT_SOLVER,
    ExperimentConfig,
    TableCache,
    run,
)
from .combine import RootSearchError, SearchError
from .euler import OrthogonalityError
from .phases import CapacityError, DecompositionError, SolverStallError
from .twist import InconclusiveError, StepRefinementError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eulerzeros",
        description=(
            "Construct and certify zeros of combinations of Euler products "
            "in the half-plane of absolute convergence"
        ),
    )
    parser.add_argument("--config", help="JSON file with ExperimentConfig fields")
    parser.add_argument("--out", help="output directory for reports")
    parser.add_argument("--cache", help="cache directory for prime tables")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=7, help="solver restart seed")

    sub = parser.add_subparsers(dest="experiment", required=True)

    p_audit = sub.add_parser("audit", help="axiom audit for a character family")
    p_dens = sub.add_parser("densities", help="density constructions and transfer")
    p_solve = sub.add_parser("solve", help="phase solver on an annulus grid")
    p_syn = sub.add_parser("synthesize", help="end-to-end zero synthesis")
    p_dh = sub.add_parser("dh", help="Hurwitz zeta flagship reproduction")
    p_scan = sub.add_parser("scan", help="window scan with certified counts")

    for p in (p_audit, p_dens, p_solve, p_syn, p_dh, p_scan):
        p.add_argument("--modulus", type=int, default=5)
        p.add_argument("--table-limit", type=int, default=10_000_000)
    for p in (p_solve, p_syn):
        p.add_argument("--sigma", type=float, default=1.01)
        p.add_argument("--y", type=float, default=10.0)
        p.add_argument("--prime-cap", type=int, default=100_000)
        p.add_argument("--m", type=int, default=4)
        p.add_argument("--tol", type=float, default=1e-6)
    for p in (p_dh, p_scan):
        p.add_argument("--band", type=float, nargs=2, default=(1.005, 1.05))
        p.add_argument("--window-length", type=float, default=None)
        p.add_argument("--windows", type=int, default=10)
        p.add_argument("--step", type=float, default=0.02)
        p.add_argument("--l", type=int, default=2, dest="dh_l")
        p.add_argument("--k", type=int, default=5, dest="dh_k")
    p_syn.add_argument(
        "--polynomial",
        help="file with one term per line: 'n:re,im;... | a1 a2 ... aN'",
    )
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    base = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    base["experiment"] = args.experiment
    for key in (
        "modulus",
        "table_limit",
        "sigma",
        "y",
        "prime_cap",
        "m",
        "tol",
        "windows",
        "step",
        "window_length",
        "dh_l",
        "dh_k",
        "threads",
        "seed",
    ):
        if hasattr(args, key) and getattr(args, key) is not None:
            base[key] = getattr(args, key)
    if getattr(args, "band", None) is not None:
        base["band"] = tuple(args.band)
    if getattr(args, "polynomial", None):
        with open(args.polynomial) as fh:
            base["polynomial_lines"] = fh.read().splitlines()
    if args.out:
        base["out_dir"] = args.out
    if args.cache:
        base["cache_dir"] = args.cache
    return ExperimentConfig(**base)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        report = run(cfg, TableCache(cfg.cache_dir))
    except (OrthogonalityError, CapacityError, DomainError, ValueError) as e:
        print(f"precondition failed: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (InconclusiveError, StepRefinementError) as e:
        print(f"inconclusive: {e}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (DecompositionError, SolverStallError, SearchError, RootSearchError) as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    print(report.to_json())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
