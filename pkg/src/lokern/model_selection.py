"""Hyperparameter grids and per-cell train/validation selection.

Two grid families are provided.  The net-based grids take exponent sets
A (a 1/log n covering of (0, 1], containing 1) and B (a 1/log n covering of
[sigma+1, sigma+d], containing sigma+d) and use the candidate values
gamma = n^-a and lambda = n^-b; their cardinality grows only logarithmically
in n.  The plain geometric grid spans data-derived bandwidths and a fixed
regularization range, mirroring common SVM tooling defaults.

Selection splits the data into a training half D1 (the first floor(n/2)+1
points of a seeded shuffle) and a validation half D2, builds the partition
from D1, trains every candidate pair on each cell's D1 points, and picks per
cell the pair whose clipped predictions minimize the validation loss over
the D2 points routed to that cell.  K-fold cross validation is available as
the experimental alternative.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from ._rng import TAG_SELECT, TAG_SOLVER, derive_rng, derive_seed
from .dataset import Dataset
from .local_model import (
    CellPolicy,
    DualSolution,
    LocalModel,
    build_partition,
    clip_bound_for,
    effective_regularizer,
)
from .partition import voronoi_assign
from .solvers import SolverConfig, clip, empirical_risk, solve_hinge_svm, solve_krr

_NET_EDGE_GUARD = 1e-12


@dataclass(frozen=True)
class HyperGrid:
    """Candidate regularizations and bandwidths, with their provenance.

    For net-based grids the generating exponent sets and (n, d, sigma) are
    recorded; geometric grids leave them as None.
    """

    lambdas: np.ndarray
    gammas: np.ndarray
    a_exponents: np.ndarray | None = None
    b_exponents: np.ndarray | None = None
    n: int | None = None
    d: int | None = None
    sigma: float | None = None

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=np.float64).ravel()
        gam = np.asarray(self.gammas, dtype=np.float64).ravel()
        if lam.size < 1 or gam.size < 1:
            raise ValueError("grids must be non-empty")
        if not (np.all(lam > 0.0) and np.all(gam > 0.0)):
            raise ValueError("grid values must be positive")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "gammas", gam)

    def candidates(self) -> list[tuple[float, float]]:
        """(lambda, gamma) pairs in enumeration order."""
        return [(float(l), float(g)) for l in self.lambdas for g in self.gammas]


def _descending_net(right: float, left: float, eps: float) -> list[float]:
    """Cover [left, right] (right end included) by a step-2*eps lattice.

    Descends from ``right``; if the lattice stops more than eps above
    ``left``, the left endpoint value is appended so the whole interval is
    within eps of the returned points.
    """
    values = [right]
    while values[-1] - 2.0 * eps > left + _NET_EDGE_GUARD:
        values.append(values[-1] - 2.0 * eps)
    if values[-1] > left + eps + _NET_EDGE_GUARD:
        values.append(left)
    return values


def make_grids(n: int, d: int, sigma: float = 0.0) -> HyperGrid:
    """Net-based candidate grids for a sample of size n in dimension d.

    A-exponents cover (0, 1] at radius 1/log n with 1 included; the covering
    point for the open left end is placed at 1/log n itself.  B-exponents
    cover [sigma+1, sigma+d] with sigma+d included.  Candidates are
    gamma = n^-a and lambda = n^-b.
    """
    if n <= math.e**2 or math.log(n) <= 2.0:
        raise ValueError("n must exceed e^2 so the 1/log n nets are non-trivial")
    if d < 1:
        raise ValueError("d must be a positive integer")
    if not 0.0 <= sigma < 1.0:
        raise ValueError("sigma must lie in [0, 1)")
    eps = 1.0 / math.log(n)
    a_exp = _descending_net(1.0, 0.0, eps)
    if a_exp[-1] <= 0.0 + _NET_EDGE_GUARD:  # left end of (0, 1] is open
        a_exp[-1] = eps
    b_exp = _descending_net(sigma + d, sigma + 1.0, eps)
    a_arr = np.asarray(a_exp)
    b_arr = np.asarray(b_exp)
    return HyperGrid(
        lambdas=np.power(float(n), -b_arr),
        gammas=np.power(float(n), -a_arr),
        a_exponents=a_arr,
        b_exponents=b_arr,
        n=int(n),
        d=int(d),
        sigma=float(sigma),
    )


def make_geometric_grid(
    features: np.ndarray,
    task: str = "regression",
    n_gammas: int = 10,
    n_lambdas: int = 10,
    gamma_span: tuple[float, float] = (0.1, 10.0),
) -> HyperGrid:
    """Plain geometric grid sized from the data's scale and task.

    Bandwidths span ``gamma_span`` times the median pairwise distance of a
    deterministic subsample (at most 512 evenly strided rows).  Regression
    regularizations are geometrically spaced over [1e-6, 1].  For the hinge
    task the per-cell dual box bound works out to C = 1/(2 n lambda)
    independent of the cell, so the classification grid is parameterized by
    C in [1e-3, 1e3]; larger boxes are near-hard-margin territory where
    coordinate-descent cost explodes for no statistical gain.
    """
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    n = X.shape[0]
    take = np.unique(np.linspace(0, n - 1, min(n, 512)).astype(int))
    dists = pdist(X[take]) if take.size > 1 else np.zeros(1)
    positive = dists[dists > 0.0]
    scale = float(np.median(positive)) if positive.size else 1.0
    if task == "classification":
        box = np.geomspace(1e-3, 1e3, n_lambdas)
        lambdas = 1.0 / (2.0 * n * box)
    else:
        lambdas = np.geomspace(1e-6, 1.0, n_lambdas)
    return HyperGrid(
        lambdas=lambdas,
        gammas=np.geomspace(gamma_span[0] * scale, gamma_span[1] * scale, n_gammas),
    )


@dataclass(frozen=True)
class SelectionResult:
    """Per-cell selection outcome plus the resulting composite model.

    validation_losses[j, c] is the mean clipped validation loss of candidate
    c in cell j (NaN where a cell had nothing to validate on); chosen pairs
    minimize (loss, lambda, gamma) lexicographically.  ``fallback_flags``
    marks cells that fell back to (max lambda, median gamma) for lack of
    validation points; ``fold_counts`` records per-cell fold counts for
    cross validation (None for train/validation selection).
    """

    candidates: tuple[tuple[float, float], ...]
    validation_losses: np.ndarray
    chosen_indices: np.ndarray
    fallback_flags: np.ndarray
    model: LocalModel
    n_training_runs: int
    seed: int
    fold_counts: np.ndarray | None = None
    train_indices: np.ndarray | None = None
    val_indices: np.ndarray | None = None

    @property
    def chosen_pairs(self) -> list[tuple[float, float]]:
        return [self.candidates[i] for i in self.chosen_indices]

    def write_trace_csv(self, path) -> None:
        """Selection trace: one row per (cell, candidate) with the chosen flag."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["cell", "lambda", "gamma", "validation_loss", "chosen"])
            for j in range(self.validation_losses.shape[0]):
                for c, (lam, gam) in enumerate(self.candidates):
                    writer.writerow([
                        j,
                        format(lam, ".17g"),
                        format(gam, ".17g"),
                        format(self.validation_losses[j, c], ".17g"),
                        int(self.chosen_indices[j] == c),
                    ])


def _fallback_index(candidates: list[tuple[float, float]], grid: HyperGrid) -> int:
    """Candidate used when a cell has no validation points.

    Largest regularization with the lower-median bandwidth: the most
    conservative grid member.
    """
    lam = float(np.max(grid.lambdas))
    gam_sorted = np.sort(grid.gammas)
    gam = float(gam_sorted[(gam_sorted.size - 1) // 2])
    return candidates.index((lam, gam))


def _resolve_cells(cells, n: int) -> tuple[int, int | None]:
    if isinstance(cells, CellPolicy):
        cap = int(cells.value) if cells.kind == "cap" else None
        return cells.resolve(n), cap
    m = int(cells)
    if not 1 <= m <= n:
        raise ValueError(f"cell count must lie in [1, {n}], got {m}")
    return m, None


def _train_cell(task, X, y, gamma, reg, cfg, seed, gram, warm_start=None):
    cell_cfg = SolverConfig(
        kkt_tolerance=cfg.kkt_tolerance,
        max_passes=cfg.max_passes,
        linear_solver=cfg.linear_solver,
        cg_tolerance=cfg.cg_tolerance,
        direct_solve_max=cfg.direct_solve_max,
        seed=seed,
    )
    if task == "regression":
        return solve_krr(X, y, gamma, reg, cell_cfg, gram=gram)
    return solve_hinge_svm(X, y, gamma, reg, cell_cfg, gram=gram,
                           warm_start=warm_start)


def train_validate(
    ds: Dataset,
    cells,
    grid: HyperGrid,
    cfg: SolverConfig | None = None,
    seed: int = 0,
) -> SelectionResult:
    """Half-split train/validation hyperparameter selection.

    The data is shuffled deterministically from ``seed``; the first
    floor(n/2)+1 points become the training half, the rest the validation
    half.  The partition is built from the training half; every candidate
    pair is trained on each cell (exactly m * |grid| training runs) and the
    returned model is assembled from the per-cell winners, trained on the
    training half.
    """
    if ds.n < 4:
        raise ValueError("train_validate requires at least 4 samples")
    cfg = cfg or SolverConfig()
    perm = derive_rng(seed, TAG_SELECT).permutation(ds.n)
    l = ds.n // 2 + 1
    train, val = ds.subset(perm[:l]), ds.subset(perm[l:])

    m, cap = _resolve_cells(cells, train.n)
    part = build_partition(train.features, m, max_cell_points=cap)
    m = part.m
    val_assign = voronoi_assign(val.features, part.center_points)
    bound = clip_bound_for(train)
    task_loss = "least_squares" if ds.task == "regression" else "hinge"
    candidates = grid.candidates()
    fallback = _fallback_index(candidates, grid)

    losses = np.full((m, len(candidates)), np.nan)
    chosen = np.zeros(m, dtype=np.intp)
    fallback_flags = np.zeros(m, dtype=bool)
    winners: list[DualSolution | None] = [None] * m
    runs = 0

    for j in range(m):
        tr_idx = np.flatnonzero(part.assignment == j)
        Xj, yj = train.features[tr_idx], train.labels[tr_idx]
        va_idx = np.flatnonzero(val_assign == j)
        Xv, yv = val.features[va_idx], val.labels[va_idx]
        has_val = va_idx.size > 0
        fallback_flags[j] = not has_val
        d2_tr = squareform(pdist(Xj, "sqeuclidean"))
        d2_va = cdist(Xv, Xj, "sqeuclidean") if has_val else None
        solver_seed = derive_seed(seed, TAG_SOLVER, j)

        best_key = None
        # bandwidth outer so each Gram matrix is built once per cell; within a
        # bandwidth, regularizations descend so hinge solves can warm-start
        lam_path = np.argsort(-grid.lambdas, kind="stable")
        for gi, gam in enumerate(grid.gammas):
            K = np.exp(-d2_tr / gam**2)
            Kv = np.exp(-d2_va / gam**2) if has_val else None
            warm = None
            for li in lam_path:
                lam = grid.lambdas[li]
                c = li * grid.gammas.size + gi
                reg = effective_regularizer(train.n, float(lam), tr_idx.size)
                sol = _train_cell(ds.task, Xj, yj, float(gam), reg, cfg,
                                  solver_seed, K, warm_start=warm)
                if ds.task == "classification":
                    warm = sol.alphas * yj
                runs += 1
                if has_val:
                    preds = clip(Kv @ sol.alphas, bound)
                    losses[j, c] = empirical_risk(task_loss, preds, yv)
                    key = (losses[j, c], float(lam), float(gam))
                    if best_key is None or key < best_key:
                        best_key, chosen[j], winners[j] = key, c, sol
                elif c == fallback:
                    chosen[j], winners[j] = c, sol

    model = _assemble(part, winners, candidates, chosen, task_loss, bound, train.n)
    return SelectionResult(tuple(candidates), losses, chosen, fallback_flags,
                           model, runs, seed,
                           train_indices=perm[:l], val_indices=perm[l:])


def kfold_cv(
    ds: Dataset,
    cells,
    grid: HyperGrid,
    k: int,
    cfg: SolverConfig | None = None,
    seed: int = 0,
) -> SelectionResult:
    """Per-cell k-fold cross validation with a refit on each full cell.

    Folds are split within each cell's point set (fold count lowered to the
    cell size when a cell is smaller than k, flagged via ``fold_counts``);
    candidate pairs are scored by the mean clipped validation loss across
    folds and the winner is refit on all of the cell's points.  Cells with
    fewer than 2 points cannot be validated and fall back to
    (max lambda, median gamma).
    """
    if not 2 <= k <= ds.n:
        raise ValueError("k must lie in [2, n]")
    cfg = cfg or SolverConfig()
    m, cap = _resolve_cells(cells, ds.n)
    part = build_partition(ds.features, m, max_cell_points=cap)
    m = part.m
    bound = clip_bound_for(ds)
    task_loss = "least_squares" if ds.task == "regression" else "hinge"
    candidates = grid.candidates()
    fallback = _fallback_index(candidates, grid)

    losses = np.full((m, len(candidates)), np.nan)
    chosen = np.zeros(m, dtype=np.intp)
    fallback_flags = np.zeros(m, dtype=bool)
    fold_counts = np.zeros(m, dtype=np.intp)
    winners: list[DualSolution | None] = [None] * m
    runs = 0

    for j in range(m):
        idx = np.flatnonzero(part.assignment == j)
        Xj, yj = ds.features[idx], ds.labels[idx]
        nj = idx.size
        solver_seed = derive_seed(seed, TAG_SOLVER, j)
        if nj < 2:
            fallback_flags[j] = True
            chosen[j] = fallback
        else:
            kj = min(k, nj)
            fold_counts[j] = kj
            folds = np.array_split(derive_rng(seed, TAG_SELECT, j).permutation(nj), kj)
            d2 = squareform(pdist(Xj, "sqeuclidean"))
            best_key = None
            lam_path = np.argsort(-grid.lambdas, kind="stable")
            for gi, gam in enumerate(grid.gammas):
                K = np.exp(-d2 / gam**2)
                warms = [None] * len(folds)
                for li in lam_path:
                    lam = grid.lambdas[li]
                    c = li * grid.gammas.size + gi
                    reg = effective_regularizer(ds.n, float(lam), nj)
                    fold_losses = []
                    for f, fold in enumerate(folds):
                        tr = np.setdiff1d(np.arange(nj), fold)
                        sol = _train_cell(ds.task, Xj[tr], yj[tr], float(gam), reg,
                                          cfg, solver_seed, K[np.ix_(tr, tr)],
                                          warm_start=warms[f])
                        if ds.task == "classification":
                            warms[f] = sol.alphas * yj[tr]
                        runs += 1
                        preds = clip(K[np.ix_(fold, tr)] @ sol.alphas, bound)
                        fold_losses.append(empirical_risk(task_loss, preds, yj[fold]))
                    losses[j, c] = float(np.mean(fold_losses))
                    key = (losses[j, c], float(lam), float(gam))
                    if best_key is None or key < best_key:
                        best_key, chosen[j] = key, c

        lam, gam = candidates[chosen[j]]
        reg = effective_regularizer(ds.n, lam, nj)
        winners[j] = _train_cell(ds.task, Xj, yj, gam, reg, cfg, solver_seed, None)
        runs += 1

    model = _assemble(part, winners, candidates, chosen, task_loss, bound, ds.n)
    return SelectionResult(tuple(candidates), losses, chosen, fallback_flags,
                           model, runs, seed, fold_counts=fold_counts)


def _assemble(part, winners, candidates, chosen, task_loss, bound, n_train):
    lambdas = np.array([candidates[i][0] for i in chosen])
    gammas = np.array([candidates[i][1] for i in chosen])
    cells = []
    for sol in winners:
        # stamp the shared clip bound onto each stored cell solution
        cells.append(DualSolution(sol.alphas, sol.support_inputs, sol.gamma, sol.reg,
                                  sol.loss, bound, diagnostic=sol.diagnostic,
                                  passes=sol.passes))
    return LocalModel(part.center_points, tuple(cells), lambdas, gammas,
                      task_loss, bound, n_train)
