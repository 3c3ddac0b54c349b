"""``bvpa`` command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Data goes to files or standard output; diagnostics go to standard error.
Every output file is written to a temporary name and renamed into place, so a
failed command never leaves a partial file.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import data as dp
from .em import MOD2_TRUNCATION, VARIANTS, EmConfig, FitResult, fit
from .errors import BvpaError, ConvergenceError, DataFormatError, DegenerateDataError
from .model import XI1, XI2, XI3, XI4, BvpaParams, bvpa_marginal, bvpa_sample, partition_sample
from .pareto import pareto_sf
from .study import StudyConfig, bootstrap_ci, run_study

log = logging.getLogger("bvpa")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
PRESETS = {"xi1": XI1, "xi2": XI2, "xi3": XI3, "xi4": XI4}
SEED_ENV = "BVPA_SEED"
# ties are bit-exact only for dyadic scales; this tolerance catches the rest
TIE_RTOL = 1e-9


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _params(values: Sequence[str]) -> BvpaParams:
    if len(values) == 1 and values[0].lower() in PRESETS:
        return PRESETS[values[0].lower()]
    if len(values) != 7:
        raise UsageError(f"expected 7 parameter values or one of {sorted(PRESETS)}, got {len(values)} values")
    try:
        return BvpaParams.from_sequence([float(v) for v in values])
    except ValueError as exc:
        raise UsageError(f"invalid parameters: {exc}") from None


def _seed(arg: Optional[int]) -> int:
    if arg is not None:
        return arg
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    seed = int(np.random.SeedSequence().entropy % 2**63)
    log.warning("no seed given; using %d", seed)
    return seed


def _emit(out: Optional[str], text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        dp.atomic_write_text(out, text)


def _em_config(args, variant: str) -> EmConfig:
    # fit_mod2 supplies the mod2t cap when truncate_at is unset
    return EmConfig(variant=variant, tol=args.tol, max_iter=args.max_iter, truncate_at=args.truncate_at,
                    gd_step=args.gd_step)


def _add_em_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-5, help="relative pseudo log-likelihood tolerance")
    p.add_argument("--max-iter", type=int, default=50_000, help="iteration cap")
    p.add_argument("--truncate-at", type=int, default=None,
                   help=f"truncation cap; mod2t defaults to {MOD2_TRUNCATION}")
    p.add_argument("--gd-step", type=float, default=None,
                   help="fixed gradient rate for mod2; default is 0.01*sigma0/(1+|g0|) per scale")


def _summary(res: FitResult) -> str:
    est = " ".join(f"{k}={v:.6g}" for k, v in res.params.as_dict().items())
    return f"{res.variant}: iterations={res.iterations} converged={res.converged} {est}"


def cmd_sample(args) -> int:
    p = _params(args.params)
    if args.n < 0:
        raise UsageError("--n must be >= 0")
    x = bvpa_sample(p, args.n, seed=_seed(args.seed))
    _emit(args.out, dp.table_to_csv(("x1", "x2"), x))
    ties = partition_sample(x, p.mu1, p.mu2, p.sigma1, p.sigma2, rtol=TIE_RTOL).n0 if len(x) else 0
    frac = ties / len(x) if len(x) else float("nan")
    print(f"ties: {ties} of {len(x)} (fraction {frac:.4f}; model {p.alpha0 / p.alpha_sum:.4f})", file=sys.stderr)
    return EXIT_OK


def cmd_fit(args) -> int:
    _, x = dp.load_pairs(args.input)
    res = fit(x, _em_config(args, args.variant))
    _emit(args.out_json, res.to_json(include_trace=args.trace) + "\n")
    print(_summary(res), file=sys.stderr)
    for note in res.notes:
        print(f"note: {note}", file=sys.stderr)
    if res.truncated:
        print(f"note: truncated at {res.iterations} iterations", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    for v in args.variants:
        if v not in VARIANTS:
            raise UsageError(f"unknown variant {v!r}; choose from {VARIANTS}")
    cfg = StudyConfig(
        true_params=_params(args.true_params),
        sample_sizes=tuple(args.sizes),
        replications=args.reps,
        variants=tuple(args.variants),
        base_seed=_seed(args.seed),
        parallelism=args.parallelism,
        em=_em_config(args, "mod1"),
    )
    report = run_study(cfg)
    _emit(args.out, report.to_csv())
    if args.out_json:
        dp.atomic_write_text(args.out_json, report.to_json() + "\n")
    worst = EXIT_OK
    for c in report.cells:
        line = f"{c.variant} n={c.n}: AI={c.average_iterations:.2f} failures={c.failures}/{c.replications}"
        if c.nonconverged:
            line += f" nonconverged={c.nonconverged}"
        if c.truncated:
            line += f" truncated={c.truncated}"
        print(line, file=sys.stderr)
        if c.failures == c.replications:
            worst = EXIT_NUMERIC
    return worst


def cmd_bootstrap(args) -> int:
    try:
        doc = json.loads(Path(args.fit_json).read_text(encoding="utf-8"))
        fitted = FitResult.from_dict(doc)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{args.fit_json}: malformed fit JSON ({type(exc).__name__}: {exc})") from None
    variant = args.variant or fitted.variant
    if variant not in VARIANTS:
        raise UsageError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    ci = bootstrap_ci(fitted.params, args.n, variant, args.resamples, _seed(args.seed),
                      em=_em_config(args, variant), parallelism=args.parallelism)
    _emit(args.out, ci.to_csv())
    print(f"bootstrap {variant}: {ci.resamples} resamples, {ci.failures} failures", file=sys.stderr)
    return EXIT_OK


def _scan(args, raw) -> int:
    levels = np.round(np.arange(0.0, 1.0, args.scan_step), 10)
    rows = dp.threshold_scan(raw, levels, target=args.target_n)
    text = dp.table_to_csv(("q1", "q2", "threshold1", "threshold2", "retained"),
                           [(r.q1, r.q2, r.threshold1, r.threshold2, str(r.retained)) for r in rows])
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dp.atomic_write_text(out_dir / "threshold_scan.csv", text)
    print(f"scan: {len(rows)} threshold pairs written", file=sys.stderr)
    return EXIT_OK


def cmd_analyze(args) -> int:
    raw = dp.load_csv(args.input)
    print(f"loaded {len(raw)} rows", file=sys.stderr)
    if args.scan:
        return _scan(args, raw)
    if args.thresholds is None:
        raise UsageError("give --thresholds T1 T2 or --scan")
    pot = dp.PotConfig(*args.thresholds, scale_divisors=tuple(args.divisors) if args.divisors else None)
    x = dp.pot_transform(raw, pot)
    print(f"peaks over threshold retained {len(x)} rows", file=sys.stderr)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = {}
    for variant in args.variants:
        if variant not in VARIANTS:
            raise UsageError(f"unknown variant {variant!r}; choose from {VARIANTS}")
        res = fit(x, _em_config(args, variant))
        results[variant] = res
        print(_summary(res), file=sys.stderr)
    rows = [(v, k, val, str(r.iterations)) for v, r in results.items() for k, val in r.params.as_dict().items()]
    outputs = {
        "estimates.csv": dp.table_to_csv(("variant", "parameter", "estimate", "iterations"), rows),
        "fits.json": json.dumps({v: r.to_dict() for v, r in results.items()}, indent=2) + "\n",
        "density_grid.csv": dp.grid_to_csv(dp.density_grid_2d(x, tuple(args.bins))),
    }
    ref = results[args.variants[0]]
    for j in (1, 2):
        law = bvpa_marginal(ref.params, j)
        xs, level = dp.empirical_survival(x[:, j - 1])
        outputs[f"survival_x{j}.csv"] = dp.table_to_csv(("x", "empirical", "fitted"),
                                                        zip(xs, level, pareto_sf(law, xs)))
        ks = dp.ks_distance(x[:, j - 1], lambda v, law=law: pareto_sf(law, v))
        print(f"marginal {j} ({ref.variant}): KS distance {ks:.4f}", file=sys.stderr)
    for name, text in outputs.items():
        dp.atomic_write_text(out_dir / name, text)
    return EXIT_OK


def cmd_density_grid(args) -> int:
    _, x = dp.load_pairs(args.input)
    _emit(args.out, dp.grid_to_csv(dp.density_grid_2d(x, tuple(args.bins))))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bvpa", description="Bivariate Pareto sampling, EM fitting and simulation studies.",
                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt = dict(formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    seed_help = f"RNG seed (falls back to ${SEED_ENV})"

    p = sub.add_parser("sample", help="draw a BVPA sample", **fmt)
    p.add_argument("--params", nargs="+", required=True, metavar="P",
                   help="mu1 mu2 sigma1 sigma2 alpha0 alpha1 alpha2, or a preset name xi1..xi4")
    p.add_argument("--n", type=int, required=True, help="sample size")
    p.add_argument("--seed", type=int, default=None, help=seed_help)
    p.add_argument("--out", default="-", help="output CSV (x1,x2), '-' for stdout")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="fit one EM variant to a two-column CSV", **fmt)
    p.add_argument("--in", dest="input", required=True, help="input CSV with a header row")
    p.add_argument("--variant", choices=VARIANTS, default="mod1", help="EM variant")
    _add_em_flags(p)
    p.add_argument("--out-json", default="-", help="FitResult JSON, '-' for stdout")
    p.add_argument("--trace", action="store_true", help="include the pseudo log-likelihood trace")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="replication study (AI, AE, MSE per variant and n)", **fmt)
    p.add_argument("--true-params", nargs="+", required=True, metavar="P",
                   help="7 parameter values or a preset name xi1..xi4")
    p.add_argument("--sizes", nargs="+", type=int, default=[150, 250, 350, 450], help="sample sizes")
    p.add_argument("--reps", type=int, default=1000, help="replications per cell")
    p.add_argument("--variants", nargs="+", default=["mod1", "mod2", "mod2t", "mod3", "mod4"], help="variants")
    p.add_argument("--seed", type=int, default=None, help=seed_help)
    p.add_argument("--parallelism", type=int, default=1, help="worker processes")
    _add_em_flags(p)
    p.add_argument("--out", default="-", help="report CSV, '-' for stdout")
    p.add_argument("--out-json", default=None, help="optional report JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bootstrap", help="parametric bootstrap confidence intervals", **fmt)
    p.add_argument("--fit-json", required=True, help="FitResult JSON written by 'fit'")
    p.add_argument("--n", type=int, required=True, help="size of each simulated dataset")
    p.add_argument("--resamples", type=int, default=1000, help="number of refits")
    p.add_argument("--variant", choices=VARIANTS, default=None, help="refit variant (default: the JSON's variant)")
    p.add_argument("--seed", type=int, default=None, help=seed_help)
    p.add_argument("--parallelism", type=int, default=1, help="worker processes")
    _add_em_flags(p)
    p.add_argument("--out", default="-", help="interval CSV (parameter,lower,upper), '-' for stdout")
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("analyze", help="peaks-over-threshold fit of a loss/ALAE CSV", **fmt)
    p.add_argument("--in", dest="input", required=True, help="CSV with header loss,alae")
    p.add_argument("--thresholds", nargs=2, type=float, default=None, metavar=("T1", "T2"),
                   help="joint thresholds on loss and ALAE")
    p.add_argument("--divisors", nargs=2, type=float, default=None, metavar=("D1", "D2"),
                   help="rescaling divisors (default: the thresholds)")
    p.add_argument("--variants", nargs="+", default=["mod1", "mod2", "mod3", "mod4"], help="variants to fit")
    p.add_argument("--bins", nargs=2, type=int, default=[20, 20], metavar=("B1", "B2"), help="density grid bins")
    p.add_argument("--scan", action="store_true", help="write a threshold scan instead of fitting")
    p.add_argument("--scan-step", type=float, default=0.01, help="quantile grid step for --scan")
    p.add_argument("--target-n", type=int, default=None, help="with --scan, keep only pairs retaining this many rows")
    _add_em_flags(p)
    p.add_argument("--out-dir", required=True, help="output directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("density-grid", help="empirical 2-D histogram with unit total mass", **fmt)
    p.add_argument("--in", dest="input", required=True, help="two-column CSV with a header row")
    p.add_argument("--bins", nargs=2, type=int, default=[20, 20], metavar=("B1", "B2"), help="bins per axis")
    p.add_argument("--out", default="-", help="grid CSV, '-' for stdout")
    p.set_defaults(func=cmd_density_grid)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"bvpa {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, ArithmeticError, FloatingPointError) as exc:
        print(f"bvpa {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataFormatError, DegenerateDataError, OSError) as exc:
        print(f"bvpa {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BvpaError as exc:
        print(f"bvpa {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"bvpa {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
