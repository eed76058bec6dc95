"""Command-line interface: experiment sweeps, dimension diagnostics, data gen.

Exit codes: 0 on full success, 2 when a run completed with flagged/partial
results, 1 on fatal errors.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from .dataset import DatasetError, load_csv
from .experiment import (
    ExperimentConfig,
    diagnose,
    emit_diagnose_csv,
    emit_report,
    load_experiment_dataset,
    run_experiment,
)
from .local_model import CellPolicy
from .solvers import SolverError
from .synthetic import GENERATORS, make_synthetic


def _add_data_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", help="CSV file; last column is the label")
    parser.add_argument("--task", choices=("regression", "classification"),
                        help="task kind (required with --data)")
    parser.add_argument("--header", action="store_true",
                        help="CSV has a single header line")
    parser.add_argument("--synthetic", choices=sorted(GENERATORS),
                        help="use a built-in synthetic dataset instead of --data")
    parser.add_argument("--synthetic-n", type=int, default=5000,
                        help="synthetic sample count (default 5000)")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    std = parser.add_mutually_exclusive_group()
    std.add_argument("--standardize", dest="standardize", action="store_true",
                     default=True, help="standardize features/labels (default)")
    std.add_argument("--no-standardize", dest="standardize", action="store_false")


def _parse_selection(text: str) -> tuple[str, int]:
    if text in ("tv", "train_validate"):
        return "train_validate", 0
    kind, _, folds = text.partition(":")
    if kind == "cv":
        return "cv", int(folds) if folds else 5
    raise argparse.ArgumentTypeError(
        f"cannot parse selection {text!r}; use 'tv' or 'cv:K'"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lokern",
        description="Localized kernel regression/SVM experiments on Voronoi partitions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="sweep added dimensions p and report test errors")
    _add_data_arguments(run)
    run.add_argument("--p-max", type=int, default=50,
                     help="sweep p = 0..P_MAX (default 50)")
    run.add_argument("--p-list", default=None,
                     help="comma-separated explicit p values (overrides --p-max)")
    run.add_argument("--repetitions", type=int, default=10)
    run.add_argument("--test-fraction", type=float, default=0.2)
    run.add_argument("--cells", default="cap:4000",
                     help="cell policy: global, cap:N, sigma:S, or fixed:M "
                          "(default cap:4000)")
    run.add_argument("--grid", choices=("geometric", "paper"), default="geometric",
                     help="geometric 10x10 grid (default) or the n^-exponent nets")
    run.add_argument("--sigma", type=float, default=0.0,
                     help="sigma exponent recorded in the paper-net grids")
    run.add_argument("--selection", default="cv:5",
                     help="'cv:K' k-fold cross validation (default cv:5) or "
                          "'tv' train/validation split")
    run.add_argument("--share-embedding", action="store_true",
                     help="reuse one embedding across repetitions")
    run.add_argument("--jobs", type=int, default=1, help="parallel (p, rep) tasks")
    run.add_argument("--out", required=True, help="report file path")
    run.add_argument("--format", choices=("csv", "json"), default="csv")

    diag = sub.add_parser("diagnose", help="intrinsic-dimension diagnostics")
    _add_data_arguments(diag)
    diag.add_argument("--p-list", default="0",
                      help="comma-separated added-dimension counts (default 0)")
    diag.add_argument("--out", required=True, help="diagnostics CSV path")

    synth = sub.add_parser("synth", help="write a synthetic dataset to CSV")
    synth.add_argument("--name", choices=sorted(GENERATORS), required=True)
    synth.add_argument("--n", type=int, default=5000)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True)
    return parser


def _parse_p_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse p list {text!r}") from None


def _config_from_args(args) -> ExperimentConfig:
    if (args.data is None) == (args.synthetic is None):
        raise DatasetError("provide exactly one of --data or --synthetic")
    selection, folds = _parse_selection(args.selection)
    return ExperimentConfig(
        data_path=args.data,
        task=args.task,
        has_header=args.header,
        synthetic=args.synthetic,
        synthetic_n=args.synthetic_n,
        p_max=args.p_max,
        p_values=_parse_p_list(args.p_list) if args.p_list else None,
        repetitions=args.repetitions,
        test_fraction=args.test_fraction,
        cell_policy=CellPolicy.parse(args.cells),
        grid_policy="paper_nets" if args.grid == "paper" else "geometric_10x10",
        selection=selection,
        cv_folds=folds if folds else 5,
        sigma=args.sigma,
        seed=args.seed,
        standardize=args.standardize,
        share_embedding=args.share_embedding,
        n_jobs=args.jobs,
    )


def _cmd_run(args) -> int:
    report = run_experiment(_config_from_args(args))
    emit_report(report, args.out, fmt=args.format)
    if not report.complete:
        logging.getLogger("lokern").warning(
            "%d run(s) failed; report is partial", len(report.failures)
        )
        return 2
    return 0


def _cmd_diagnose(args) -> int:
    if (args.data is None) == (args.synthetic is None):
        raise DatasetError("provide exactly one of --data or --synthetic")
    if args.synthetic is not None:
        ds = make_synthetic(args.synthetic, args.synthetic_n, seed=args.seed)
    else:
        if args.task is None:
            raise DatasetError("--task is required with --data")
        ds = load_csv(args.data, args.task, has_header=args.header)
    rows = diagnose(ds, _parse_p_list(args.p_list), seed=args.seed,
                    apply_standardize=args.standardize)
    emit_diagnose_csv(rows, args.out)
    for row in rows:
        print(f"p={row.p} dimension_estimate={row.dimension_estimate:.4f}")
    return 0


def _cmd_synth(args) -> int:
    ds = make_synthetic(args.name, args.n, seed=args.seed)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for x, y in zip(ds.features, ds.labels):
            writer.writerow([format(v, ".17g") for v in x] + [format(y, ".17g")])
    print(f"wrote {ds.n} samples to {args.out}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "diagnose":
            return _cmd_diagnose(args)
        return _cmd_synth(args)
    except (DatasetError, SolverError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
