"""Command-line entry point: ``causalfs {simulate,aggregate,bootstrap,selftest}``.

Every flag can also come from a flat ``key = value`` file given with
``--config`` (keys are flag names with or without the leading dashes;
``#`` starts a comment). Flags on the command line win over the file.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure
(including failed self-test checks).
"""

import argparse
import logging
import sys

import numpy as np
from scipy import linalg

from ..exceptions import DataError, NumericalError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 means a data error here
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def read_config(path):
    """Parse a flat key/value file into a dict with normalized (underscore) keys."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{num}: expected 'key = value'")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip().strip('"').strip("'")
    return out


def int_list(text):
    return [int(x) for x in str(text).split(",") if x.strip()]


def float_list(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def str_list(text):
    return [x.strip() for x in str(text).split(",") if x.strip()]


def seed_list(text):
    """'1-30', '3', or mixtures like '1-5,9'."""
    seeds = []
    for part in str_list(text):
        lo, sep, hi = part.partition("-")
        seeds.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
    return seeds


# (flag, dest, type, default, help) per subcommand
SIMULATE_FLAGS = [
    ("--scenario", "scenario", int_list, "1,2,3,4", "scenario ids"),
    ("--n", "n", int_list, "200,500,1000", "sample sizes"),
    ("--rho", "rho", float_list, "0,0.25,0.5,0.75", "covariate correlations"),
    ("--seeds", "seeds", seed_list, "1-30", "seed list or range, e.g. 1-30"),
    ("--models", "models", str_list, "Enh-ELRT,Enh-ELRS,Enh-ESVMT,Enh-ESVMS", "model names"),
    ("--out", "out", str, None, "record store directory"),
    ("--workers", "workers", int, "1", "worker processes"),
    ("--true-effect", "true_effect", float, "0", "injected treatment effect"),
]
AGGREGATE_FLAGS = [
    ("--store", "store", str, None, "record store directory or records CSV"),
    ("--kind", "kind", str, None, "bias | selectionProbability | biasSummary | timing"),
    ("--out", "out", str, None, "output CSV"),
]
BOOTSTRAP_FLAGS = [
    ("--csv", "csv", str, None, "input data"),
    ("--treatment", "treatment", str, None, "treatment column"),
    ("--outcome", "outcome", str, None, "outcome column"),
    ("--iters", "iters", int, "500", "bootstrap iterations"),
    ("--control-sample", "control_sample", int, "5000", "controls drawn per iteration"),
    ("--threshold", "threshold", float, "0.7", "consensus frequency threshold"),
    ("--expert-features", "expert_features", str_list, None,
     "comma-separated feature names or 1-based positions"),
    ("--seed", "seed", int, "0", "random seed"),
    ("--models", "models", str_list, "Enh-ELRT,Enh-ELRS,Enh-ESVMT,Enh-ESVMS", "model names"),
    ("--out", "out", str, None, "output prefix (writes <out>.json and <out>_frequencies.csv)"),
]
SELFTEST_FLAGS = [
    ("--only", "only", str_list, None, "restrict to these modules"),
]
COMMANDS = {
    "simulate": (SIMULATE_FLAGS, "run the simulation grid"),
    "aggregate": (AGGREGATE_FLAGS, "summarize a record store to CSV"),
    "bootstrap": (BOOTSTRAP_FLAGS, "bootstrap selection study on a CSV"),
    "selftest": (SELFTEST_FLAGS, "run the invariant suite"),
}


def build_parser():
    parser = _Parser(prog="causalfs", description="Covariate selection for causal inference.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (flags, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value file with defaults for these flags")
        for flag, dest, _, default, help_ in flags:
            # raw strings here; conversion happens after merging with the config file
            suffix = f" (default {default})" if default is not None else ""
            p.add_argument(flag, dest=dest, default=None, help=help_ + suffix)
    return parser


def resolve(args, flags):
    """Merge flags over the config file over defaults, converting each value."""
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    known = {dest for _, dest, *_ in flags}
    unknown = set(cfg) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = {}
    for flag, dest, conv, default, _ in flags:
        raw = getattr(args, dest)
        if raw is None:
            raw = cfg.get(dest, default)
        if raw is None:
            out[dest] = None
            continue
        try:
            out[dest] = conv(raw)
        except ValueError as exc:
            raise UsageError(f"bad value for {flag}: {raw!r}") from exc
    return out


def _require(opts, *names):
    missing = [n for n in names if opts.get(n) is None]
    if missing:
        raise UsageError("missing required option(s): " +
                         ", ".join("--" + n.replace("_", "-") for n in missing))


def cmd_simulate(opts):
    from .grid import ExperimentGrid, run_grid

    _require(opts, "out")
    try:
        grid = ExperimentGrid(scenarios=tuple(opts["scenario"]), ns=tuple(opts["n"]),
                              rhos=tuple(opts["rho"]), seeds=tuple(opts["seeds"]),
                              models=tuple(opts["models"]), true_effect=opts["true_effect"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if opts["workers"] < 1:
        raise UsageError("--workers must be at least 1")
    summary = run_grid(grid, opts["out"], workers=opts["workers"])
    print(f"computed {summary.computed}, skipped {summary.skipped}, "
          f"errors {summary.errors}, {summary.elapsed_seconds:.1f}s")
    return EXIT_OK


def cmd_aggregate(opts):
    from .aggregate import PLOT_HEADERS, emit_plot_data

    _require(opts, "store", "kind", "out")
    if opts["kind"] not in PLOT_HEADERS:
        raise UsageError(f"--kind must be one of {', '.join(PLOT_HEADERS)}")
    try:
        rows = emit_plot_data(opts["store"], opts["kind"], opts["out"])
    except (OSError, KeyError) as exc:
        raise DataError(f"cannot read record store: {exc}") from exc
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    print(f"wrote {rows} rows to {opts['out']}")
    return EXIT_OK


def cmd_bootstrap(opts):
    from .bootstrap import RealDataJob, run_bootstrap_study, write_report

    _require(opts, "csv", "treatment", "outcome", "out")
    try:
        job = RealDataJob(opts["csv"], opts["treatment"], opts["outcome"],
                          iterations=opts["iters"], control_sample_size=opts["control_sample"],
                          threshold=opts["threshold"], expert_features=opts["expert_features"],
                          seed=opts["seed"], models=tuple(opts["models"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = run_bootstrap_study(job)
    prefix = opts["out"][:-5] if opts["out"].endswith(".json") else opts["out"]
    write_report(report, prefix)
    for m in report.models:
        r = report.models[m]
        line = f"{m}: consensus {list(report.consensus_names(m))}, mean ATT {r.mean_att:.4f}"
        if r.bias is not None:
            line += f", bias vs expert {r.bias:+.4f}"
        print(line)
    if report.rows_dropped:
        print(f"dropped {report.rows_dropped} rows with missing values")
    return EXIT_OK


def cmd_selftest(opts):
    from .selftest import run_selftest

    results = run_selftest(sys.stdout, only=opts["only"])
    failed = [r for r in results if not r[2]]
    total = sum(r[4] for r in results)
    print(f"{len(results) - len(failed)}/{len(results)} checks passed in {total:.1f}s")
    return EXIT_OK if not failed else EXIT_NUMERICAL


HANDLERS = {"simulate": cmd_simulate, "aggregate": cmd_aggregate,
            "bootstrap": cmd_bootstrap, "selftest": cmd_selftest}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve(args, COMMANDS[args.command][0])
        return HANDLERS[args.command](opts)
    except UsageError as exc:
        print(f"causalfs {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"causalfs {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, FloatingPointError, linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        print(f"causalfs {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
