"""Command-line front end.

Subcommands: privatize, test, rates, sweep, calibrate. The test decision is
encoded in the exit code (0 accept, 1 reject, 2 error) so shell scripts can
branch on it. Stochastic subcommands demand explicit seeding; the sweep's
seeds live in its config file, one master seed per grid point.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys

import numpy as np

from . import __version__
from .distributions import FamilySpec, ProbVector, make_family, normalize
from .harness import ExperimentConfig, calibrate_c, scaling_sweep
from .privacy import (
    PrivacyParams,
    SupportSet,
    privatize_indicator_block,
    privatize_stage2_block,
    privatize_tail_block,
    tau_of,
)
from .rates import table1_rate
from .teststats import run_test, select_B

# Grid behind `privgof rates`: every summary-table family at two privacy
# budgets, both norms, both modes. Documented in the README; the golden CSV
# in the test suite is generated from an independent evaluation of the same
# grid.
RATES_GRID_NS_ALPHAS = ((10_000, 0.5), (1_000_000, 0.2))


def rates_grid_families() -> list[FamilySpec]:
    fams = [FamilySpec("uniform", d) for d in (10, 100, 1000)]
    fams += [FamilySpec("polynomial", 1000, beta=b) for b in (0.5, 1.0, 2.0)]
    fams += [FamilySpec("exponential", 1000, beta=b, eta=0.0, c=1.0) for b in (0.5, 1.0, 2.0)]
    return fams


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _family_from_args(args) -> FamilySpec:
    if args.family is None:
        raise ValueError("--family is required (or provide --p0-file)")
    if args.d is None:
        raise ValueError("--d is required with --family")
    return FamilySpec(
        kind=args.family, d=args.d, beta=args.beta, eta=args.eta, c=args.c
    )


def _p0_from_args(args) -> ProbVector:
    p0_file = getattr(args, "p0_file", None)
    if p0_file is not None:
        with open(p0_file) as fh:
            vals = [float(line) for line in fh if line.strip()]
        return normalize(vals)
    return make_family(_family_from_args(args))


def _read_categories(path: str, d: int) -> np.ndarray:
    xs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                x = int(text)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not an integer: {text!r}")
            if not 1 <= x <= d:
                raise ValueError(f"{path}:{lineno}: category {x} outside [1, {d}]")
            xs.append(x)
    return np.asarray(xs, dtype=np.int64)


def _internal_mode(token: str) -> str:
    return {"ni": "noninteractive", "interactive": "interactive"}[token]


def cmd_privatize(args) -> int:
    p0 = _p0_from_args(args)
    params = PrivacyParams(args.alpha, args.gamma, 1)
    xs = _read_categories(args.input, p0.d)
    mode = _internal_mode(args.mode)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    blocks = 2 if mode == "noninteractive" else 3
    if xs.size < 2 * blocks:
        raise ValueError(f"need at least {2 * blocks} observations")
    if xs.size % blocks != 0:
        keep = xs.size - xs.size % blocks
        print(
            f"warning: truncating {xs.size} observations to {keep} "
            f"(must split into {blocks} equal blocks)",
            file=sys.stderr,
        )
        xs = xs[:keep]
    n = xs.size // blocks
    if args.b == "auto":
        _, b = select_B(p0, n, args.alpha, args.norm, mode)
    else:
        b = SupportSet(members=tuple(int(t) for t in args.b.split(",")), d=p0.d)
    rows: list[list] = []
    if mode == "noninteractive":
        z1 = privatize_indicator_block(xs[:n], b, params, rng)
        z2 = privatize_tail_block(xs[n:], b, params, rng)
        rows += [[format(v, ".17g") for v in row] for row in z1]
        rows += [[format(v, ".17g")] for v in z2]
    else:
        full = SupportSet(members=tuple(range(1, p0.d + 1)), d=p0.d)
        z1 = privatize_indicator_block(xs[:n], full, params, rng)
        p_hat = z1.mean(axis=0)
        tau = tau_of(n, args.alpha)
        z2 = privatize_stage2_block(xs[n : 2 * n], p_hat, p0, args.alpha, tau, rng)
        z3 = privatize_tail_block(xs[2 * n :], b, params, rng)
        rows += [[format(v, ".17g") for v in row] for row in z1]
        rows += [[format(v, ".17g")] for v in z2]
        rows += [[format(v, ".17g")] for v in z3]
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        for row in rows:
            writer.writerow(row)
    return 0


def cmd_test(args) -> int:
    p0 = _p0_from_args(args)
    params = PrivacyParams(args.alpha, args.gamma, 1)
    xs = _read_categories(args.data, p0.d)
    if xs.size == 0:
        raise ValueError("data file is empty")
    mode = _internal_mode(args.mode)
    blocks = 2 if mode == "noninteractive" else 3
    if xs.size % blocks != 0:
        keep = xs.size - xs.size % blocks
        print(
            f"warning: truncating {xs.size} observations to {keep} "
            f"(must split into {blocks} equal blocks)",
            file=sys.stderr,
        )
        xs = xs[:keep]
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    report = run_test(xs, p0, params, args.norm, mode, rng)
    print(report.to_json())
    return 1 if report.reject else 0


def _write_manifest(path: str, grid_hash: str, master_seed) -> None:
    manifest = {
        "config_hash": grid_hash,
        "code_version": __version__,
        "master_seed": master_seed,
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_rates(args) -> int:
    rows = []
    for fam in rates_grid_families():
        for n, alpha in RATES_GRID_NS_ALPHAS:
            for norm in ("l1", "l2"):
                for mode in ("noninteractive", "interactive"):
                    value = table1_rate(fam, n, alpha, norm, mode)
                    rows.append(
                        [fam.kind, fam.label(), n, alpha, norm, mode, "table1",
                         format(value, ".10g"), ""]
                    )
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(
            ["family", "params", "n", "alpha", "norm", "mode", "kind", "value",
             "j_achieving"]
        )
        writer.writerows(rows)
    grid_desc = json.dumps(
        [[f.label() for f in rates_grid_families()], RATES_GRID_NS_ALPHAS],
        sort_keys=True,
    )
    _write_manifest(
        str(args.out) + ".manifest.json",
        hashlib.sha256(grid_desc.encode()).hexdigest(),
        None,
    )
    return 0


def cmd_sweep(args) -> int:
    with open(args.config) as fh:
        obj = json.load(fh)
    if isinstance(obj, dict):
        obj = [obj]
    if not obj:
        raise ValueError("sweep grid is empty")
    grid = [ExperimentConfig.from_dict(entry) for entry in obj]
    scaling_sweep(grid, args.out, tol=args.tol, workers=args.workers)
    return 0


def cmd_calibrate(args) -> int:
    value = calibrate_c(args.m, args.cases, seed=args.seed)
    print(format(value, ".10g"))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(["m", "cases", "seed", "signal_constant"])
            writer.writerow([args.m, args.cases, args.seed, format(value, ".10g")])
        _write_manifest(
            str(args.out) + ".manifest.json",
            hashlib.sha256(f"calibrate:{args.m}:{args.cases}".encode()).hexdigest(),
            args.seed,
        )
    return 0


def _add_family_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--family",
        choices=["uniform", "nearly_uniform", "polynomial", "exponential"],
        help="reference family kind",
    )
    parser.add_argument("--d", type=int, help="alphabet size")
    parser.add_argument("--beta", type=float, default=0.0, help="family decay exponent")
    parser.add_argument("--eta", type=float, default=0.0, help="exponential family power factor")
    parser.add_argument("--c", type=float, default=1.0, help="exponential family decay scale")
    parser.add_argument(
        "--p0-file", help="file with one reference probability per line (overrides --family)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privgof",
        description="Locally private goodness-of-fit testing for discrete distributions.",
    )
    parser.add_argument("--version", action="version", version=f"privgof {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_priv = sub.add_parser("privatize", help="privatize a file of raw categories")
    p_priv.add_argument("--input", required=True, help="newline-delimited categories in [1, d]")
    p_priv.add_argument("--mode", choices=["ni", "interactive"], required=True)
    p_priv.add_argument("--norm", choices=["l1", "l2"], default="l1")
    p_priv.add_argument("--alpha", type=float, required=True, help="privacy level in (0, 1]")
    p_priv.add_argument("--gamma", type=float, default=0.1, help="risk level in (0, 1)")
    p_priv.add_argument("--b", default="auto", help='main set: "auto" or comma-separated categories')
    p_priv.add_argument("--seed", type=int, required=True, help="generator seed")
    p_priv.add_argument("--out", required=True, help="output CSV path")
    _add_family_flags(p_priv)
    p_priv.set_defaults(func=cmd_privatize)

    p_test = sub.add_parser("test", help="run one goodness-of-fit test")
    p_test.add_argument("--data", required=True, help="newline-delimited categories in [1, d]")
    p_test.add_argument("--mode", choices=["ni", "interactive"], required=True)
    p_test.add_argument("--norm", choices=["l1", "l2"], required=True)
    p_test.add_argument("--alpha", type=float, required=True, help="privacy level in (0, 1]")
    p_test.add_argument("--gamma", type=float, required=True, help="risk level in (0, 1)")
    p_test.add_argument("--seed", type=int, required=True, help="generator seed")
    _add_family_flags(p_test)
    p_test.set_defaults(func=cmd_test)

    p_rates = sub.add_parser("rates", help="write the summary rate table for the documented grid")
    p_rates.add_argument("--out", required=True, help="output CSV path")
    p_rates.set_defaults(func=cmd_rates)

    p_sweep = sub.add_parser("sweep", help="run a scaling sweep from a JSON grid config")
    p_sweep.add_argument("--config", required=True, help="JSON list of experiment configs")
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.add_argument("--tol", type=float, default=0.05, help="bisection bracket tolerance")
    p_sweep.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cal = sub.add_parser("calibrate", help="estimate the interactive signal constant")
    p_cal.add_argument("--m", type=int, default=10_000, help="replications per case (>= 10^4)")
    p_cal.add_argument("--cases", type=int, default=10, help="number of random cases")
    p_cal.add_argument("--seed", type=int, required=True, help="generator seed")
    p_cal.add_argument("--out", help="optional output CSV path")
    p_cal.set_defaults(func=cmd_calibrate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on CLI errors and 0 on --help; keep its codes.
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
