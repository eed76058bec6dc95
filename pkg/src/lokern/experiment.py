"""Experiment driver: sweep added dimensions p over repeated splits.

For every (p, repetition) pair the driver splits the data, standardizes with
statistics fit on the training split, samples and applies the embedding,
selects hyperparameters per cell, and records the test error (RMSE on the
standardized label scale for regression, 0-1 error for classification).
Reported errors are aggregated per p across repetitions; the p = 0 row is
the base error of the unembedded data.

Every (p, repetition) task gets pre-derived seeds, so reports are
reproducible and independent of the parallelism degree.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, asdict

import numpy as np
from joblib import Parallel, delayed
from threadpoolctl import threadpool_limits

from ._rng import TAG_EMBED, TAG_SELECT, TAG_SPLIT, TAG_SYNTH, derive_seed
from .dataset import Dataset, SplitSpec, load_csv, naive_error, standardize, train_test_split
from .embedding import sample_embedding, embed_dataset
from .local_model import CellPolicy
from .model_selection import make_geometric_grid, make_grids, kfold_cv, train_validate
from .partition import dimension_profile, estimate_dimension
from .solvers import SolverConfig, empirical_risk
from .synthetic import GENERATOR_TASKS, make_synthetic

log = logging.getLogger("lokern")

REPORT_HEADER = (
    "p,mean_error,std_error,naive_error,base_error,n_train,n_test,m_cells,wall_seconds"
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one experiment run.

    Defaults mirror the standard protocol: sweep p = 0..50, 10 repetitions,
    20% test split, cells capped at 4000 samples, a data-sized geometric
    10x10 grid, and 5-fold cross validation.  ``p_values`` restricts the
    sweep to an explicit subset when given.
    """

    data_path: str | None = None
    task: str | None = None
    has_header: bool = False
    synthetic: str | None = None
    synthetic_n: int = 5000
    p_max: int = 50
    p_values: tuple[int, ...] | None = None
    repetitions: int = 10
    test_fraction: float = 0.2
    cell_policy: CellPolicy = field(default_factory=lambda: CellPolicy("cap", 4000))
    grid_policy: str = "geometric_10x10"  # or "paper_nets"
    selection: str = "cv"  # "cv" or "train_validate"
    cv_folds: int = 5
    sigma: float = 0.0
    seed: int = 0
    standardize: bool = True
    share_embedding: bool = False
    n_jobs: int = 1
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if (self.data_path is None) == (self.synthetic is None):
            raise ValueError("provide exactly one of data_path or synthetic")
        if self.data_path is not None and self.task is None:
            raise ValueError("task is required when loading a CSV dataset")
        if self.p_max < 0 or self.repetitions < 1:
            raise ValueError("p_max must be >= 0 and repetitions >= 1")
        if self.grid_policy not in ("geometric_10x10", "paper_nets"):
            raise ValueError(f"unknown grid policy {self.grid_policy!r}")
        if self.selection not in ("cv", "train_validate"):
            raise ValueError(f"unknown selection {self.selection!r}")
        if self.selection == "cv" and self.cv_folds < 2:
            raise ValueError("cv_folds must be at least 2")

    def sweep(self) -> tuple[int, ...]:
        if self.p_values is not None:
            ps = tuple(sorted({int(p) for p in self.p_values}))
            if not ps or ps[0] < 0:
                raise ValueError("p_values must be non-negative")
            return ps
        return tuple(range(self.p_max + 1))


@dataclass(frozen=True)
class ReportRow:
    p: int
    mean_error: float
    std_error: float
    naive_error: float
    base_error: float
    n_train: int
    n_test: int
    m_cells: int
    wall_seconds: float


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple[ReportRow, ...]
    config: dict
    failures: tuple[tuple[int, int, str], ...] = ()

    @property
    def complete(self) -> bool:
        return not self.failures


@dataclass(frozen=True)
class RunRecord:
    p: int
    rep: int
    error: float
    wall_seconds: float
    m_cells: int
    n_train: int
    n_test: int
    message: str | None = None


def load_experiment_dataset(cfg: ExperimentConfig) -> Dataset:
    if cfg.synthetic is not None:
        return make_synthetic(cfg.synthetic, cfg.synthetic_n,
                              seed=derive_seed(cfg.seed, TAG_SYNTH))
    return load_csv(cfg.data_path, cfg.task, has_header=cfg.has_header)


def _run_single(cfg: ExperimentConfig, ds: Dataset, spec: SplitSpec,
                p: int, rep: int) -> RunRecord:
    start = time.perf_counter()
    try:
        # one BLAS thread per task: results stay bit-identical no matter how
        # many worker processes the run is spread over
        with threadpool_limits(limits=1):
            return _run_single_pinned(cfg, ds, spec, p, rep, start)
    except Exception as exc:  # noqa: BLE001 - any failed run aborts this repetition
        wall = time.perf_counter() - start
        return RunRecord(p, rep, np.nan, wall, 0, 0, 0, message=str(exc))


def _run_single_pinned(cfg: ExperimentConfig, ds: Dataset, spec: SplitSpec,
                       p: int, rep: int, start: float) -> RunRecord:
    try:
        train, test = train_test_split(ds, spec, rep)
        if cfg.standardize and train.n >= 2:
            train, record = standardize(train)
            test = record.transform_dataset(test)
        if p > 0:
            embed_rep = 0 if cfg.share_embedding else rep
            espec = sample_embedding(
                train.d, p, seed=derive_seed(cfg.seed, TAG_EMBED, p, embed_rep)
            )
            train = embed_dataset(espec, train)
            test = embed_dataset(espec, test)

        if cfg.grid_policy == "paper_nets":
            grid = make_grids(train.n, train.d, sigma=cfg.sigma)
        else:
            grid = make_geometric_grid(train.features, task=train.task)

        sel_seed = derive_seed(cfg.seed, TAG_SELECT, p, rep)
        if cfg.selection == "train_validate":
            result = train_validate(train, cfg.cell_policy, grid, cfg.solver,
                                    seed=sel_seed)
        else:
            result = kfold_cv(train, cfg.cell_policy, grid, cfg.cv_folds,
                              cfg.solver, seed=sel_seed)

        preds = result.model.predict_batch(test.features)
        if ds.task == "regression":
            err = float(np.sqrt(empirical_risk("least_squares", preds, test.labels)))
        else:
            err = empirical_risk("zero_one", preds, test.labels)
        wall = time.perf_counter() - start
        return RunRecord(p, rep, err, wall, result.model.m, train.n, test.n)
    except Exception as exc:  # noqa: BLE001 - any failed run aborts this repetition
        wall = time.perf_counter() - start
        return RunRecord(p, rep, np.nan, wall, 0, 0, 0, message=str(exc))


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Execute the configured sweep and aggregate per-p statistics."""
    ds = load_experiment_dataset(cfg)
    spec = SplitSpec(cfg.test_fraction, cfg.repetitions,
                     seed=derive_seed(cfg.seed, TAG_SPLIT))
    if cfg.standardize and ds.n >= 2:
        naive = naive_error(standardize(ds)[0])
    else:
        naive = naive_error(ds)

    ps = cfg.sweep()
    tasks = [(p, rep) for p in ps for rep in range(cfg.repetitions)]
    records: list[RunRecord] = Parallel(n_jobs=cfg.n_jobs)(
        delayed(_run_single)(cfg, ds, spec, p, rep) for p, rep in tasks
    )

    by_p: dict[int, list[RunRecord]] = {p: [] for p in ps}
    failures = []
    for rec in records:
        by_p[rec.p].append(rec)
        if rec.message is not None:
            failures.append((rec.p, rec.rep, rec.message))
            log.warning("run p=%d rep=%d failed: %s", rec.p, rec.rep, rec.message)
        else:
            log.info("run p=%d rep=%d error=%.6f wall=%.2fs",
                     rec.p, rec.rep, rec.error, rec.wall_seconds)

    rows = []
    base = np.nan
    for p in ps:
        ok = [r for r in by_p[p] if r.message is None]
        errs = np.array([r.error for r in ok])
        mean = float(errs.mean()) if errs.size else np.nan
        std = float(errs.std()) if errs.size else np.nan
        if p == ps[0] and p == 0:
            base = mean
        rows.append(ReportRow(
            p=p,
            mean_error=mean,
            std_error=std,
            naive_error=naive,
            base_error=base,
            n_train=ok[0].n_train if ok else 0,
            n_test=ok[0].n_test if ok else 0,
            m_cells=ok[0].m_cells if ok else 0,
            wall_seconds=float(np.mean([r.wall_seconds for r in by_p[p]])),
        ))
    return ExperimentReport(tuple(rows), asdict(cfg), tuple(failures))


def _fmt(value: float) -> str:
    return format(value, ".17g")


def emit_report(report: ExperimentReport, path, fmt: str = "csv") -> None:
    """Write the report as CSV (fixed header) or JSON (mirrors all fields)."""
    if fmt == "csv":
        lines = [REPORT_HEADER]
        for r in report.rows:
            lines.append(",".join([
                str(r.p), _fmt(r.mean_error), _fmt(r.std_error),
                _fmt(r.naive_error), _fmt(r.base_error), str(r.n_train),
                str(r.n_test), str(r.m_cells), _fmt(r.wall_seconds),
            ]))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    elif fmt == "json":
        payload = {
            "config": report.config,
            "rows": [asdict(r) for r in report.rows],
            "failures": [list(f) for f in report.failures],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def parse_report_csv(path) -> list[dict]:
    """Round-trip helper: parse a CSV written by :func:`emit_report`."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if not lines or lines[0] != REPORT_HEADER:
        raise ValueError("not a report CSV")
    names = lines[0].split(",")
    out = []
    for ln in lines[1:]:
        cells = ln.split(",")
        row = dict(zip(names, cells))
        for key in ("p", "n_train", "n_test", "m_cells"):
            row[key] = int(row[key])
        for key in ("mean_error", "std_error", "naive_error", "base_error",
                    "wall_seconds"):
            row[key] = float(row[key])
        out.append(row)
    return out


@dataclass(frozen=True)
class DimensionRow:
    p: int
    dimension_estimate: float
    curve: tuple[tuple[int, float], ...]


def diagnose(ds: Dataset, p_values, seed: int = 0,
             apply_standardize: bool = True) -> list[DimensionRow]:
    """Dimension estimate and covering-radius curve for each requested p.

    Embeds the (optionally standardized) features for p > 0 and reports the
    scaling-exponent dimension estimate together with its (m, radius) curve.
    """
    if ds.n < 64:
        raise ValueError("insufficient points: dimension diagnostics need n >= 64")
    if apply_standardize and ds.n >= 2:
        ds = standardize(ds)[0]
    rows = []
    for p in p_values:
        p = int(p)
        if p < 0:
            raise ValueError("p must be non-negative")
        X = ds.features
        if p > 0:
            espec = sample_embedding(ds.d, p, seed=derive_seed(seed, TAG_EMBED, p, 0))
            X = embed_dataset(espec, ds).features
        rows.append(DimensionRow(p, estimate_dimension(X),
                                 tuple(dimension_profile(X))))
    return rows


def emit_diagnose_csv(rows: list[DimensionRow], path) -> None:
    lines = ["p,m,covering_radius,dimension_estimate"]
    for row in rows:
        for m, eps in row.curve:
            lines.append(f"{row.p},{m},{_fmt(eps)},{_fmt(row.dimension_estimate)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
