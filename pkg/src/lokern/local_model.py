"""Localized estimator: FFT partition, per-cell training, routed prediction.

Training solves one regularized problem per Voronoi cell using the rescaled
regularizer  reg_j = n * lambda_j / n_j,  which makes the collection of cell
solutions the exact minimizer of the single localized-RKHS objective.
Prediction routes a query to its cell (smallest index on ties, the same rule
used at training time), evaluates that cell's decision function, and clips
the value to [-M, M].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import derive_seed
from .dataset import Dataset
from .partition import Partition, fft_centers, voronoi_assign
from .solvers import (
    DualSolution,
    SolverConfig,
    SolverError,
    clip,
    solve_hinge_svm,
    solve_krr,
)

MODEL_FORMAT_VERSION = 1
DEFAULT_CELL_CAP = 4000  # operational per-cell sample cap


@dataclass(frozen=True)
class CellPolicy:
    """Rule mapping a sample count to a number of cells.

    kind "global" uses one cell; "cap" uses ceil(n / value) cells so cells
    hold about ``value`` samples; "sigma" uses ceil(n ** value); "fixed"
    uses the given count directly.
    """

    kind: str
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("global", "cap", "sigma", "fixed"):
            raise ValueError(f"unknown cell policy {self.kind!r}")
        if self.kind == "cap" and not (self.value and self.value >= 1):
            raise ValueError("cap policy needs a positive sample cap")
        if self.kind == "sigma" and not (self.value is not None and 0 <= self.value < 1):
            raise ValueError("sigma policy needs an exponent in [0, 1)")
        if self.kind == "fixed" and not (self.value and int(self.value) >= 1):
            raise ValueError("fixed policy needs a positive cell count")

    def resolve(self, n: int) -> int:
        if self.kind == "global":
            m = 1
        elif self.kind == "cap":
            m = math.ceil(n / self.value)
        elif self.kind == "sigma":
            m = math.ceil(n**self.value)
        else:
            m = int(self.value)
        return max(1, min(m, n))

    @classmethod
    def parse(cls, text: str) -> "CellPolicy":
        """Parse "global", "cap:4000", "sigma:0.5", or "fixed:8"."""
        kind, _, value = text.partition(":")
        if kind == "global":
            return cls("global")
        if kind in ("cap", "fixed"):
            return cls(kind, int(value))
        if kind == "sigma":
            return cls(kind, float(value))
        raise ValueError(f"cannot parse cell policy {text!r}")


def effective_regularizer(n: int, lam: float, n_j: int) -> float:
    """Per-cell regularizer n * lambda_j / n_j of the localized objective."""
    return n * lam / n_j


def build_partition(points: np.ndarray, m: int,
                    max_cell_points: int | None = None) -> Partition:
    """FFT partition with every cell guaranteed non-empty.

    Centers are truncated at the first zero insertion radius (possible only
    when the input has fewer distinct points than m), which keeps the
    cell-contains-its-center invariant intact.  When ``max_cell_points`` is
    given, centers are greedily added until no cell exceeds twice the cap or
    adding centers stops helping; the partition stays a flat Voronoi diagram
    so routing is unchanged.
    """
    part = _truncated_fft(points, m)
    if max_cell_points is None:
        return part
    limit = 2 * max_cell_points
    n = np.asarray(points).shape[0]
    while part.m < n:
        largest = int(part.cell_sizes().max())
        if largest <= limit:
            break
        grown = _truncated_fft(points, part.m + 1)
        if grown.m == part.m:  # duplicates exhausted; cell cannot be split
            break
        part = grown
    return part


def _truncated_fft(points: np.ndarray, m: int) -> Partition:
    part = fft_centers(points, m)
    zero = np.flatnonzero(part.insertion_radii[1:] == 0.0)
    if zero.size == 0:
        return part
    keep = int(zero[0]) + 1
    pts = part.center_points[:keep].copy()
    return Partition(
        part.center_indices[:keep].copy(),
        pts,
        part.insertion_radii[:keep].copy(),
        voronoi_assign(np.asarray(points, dtype=np.float64), pts),
    )


@dataclass(frozen=True)
class LocalModel:
    """Partition plus one trained decision function per cell.

    Center coordinates are stored (not indices) so the model is
    self-contained once training data is dropped.
    """

    center_points: np.ndarray
    cells: tuple[DualSolution, ...]
    lambdas: np.ndarray
    gammas: np.ndarray
    loss: str
    clip_bound: float
    n_train: int

    @property
    def m(self) -> int:
        return self.center_points.shape[0]

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        """Unclipped decision values, routed through the Voronoi cells."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.empty(X.shape[0])
        if X.shape[0] == 0:
            return out
        assign = voronoi_assign(X, self.center_points)
        for j in np.unique(assign):
            mask = assign == j
            out[mask] = self.cells[j].decision_function(X[mask])
        return out

    def predict(self, x: np.ndarray) -> float:
        """Clipped prediction for a single input vector."""
        x = np.asarray(x, dtype=np.float64).ravel()
        return float(clip(self.decision_function(x[None, :]), self.clip_bound)[0])

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        """Vectorized predict; identical values to pointwise calls."""
        return clip(self.decision_function(X), self.clip_bound)

    def save(self, path) -> None:
        """Write the model to a single self-describing .npz file."""
        payload = {
            "format_version": np.array(MODEL_FORMAT_VERSION),
            "loss": np.array(self.loss),
            "clip_bound": np.array(self.clip_bound),
            "n_train": np.array(self.n_train),
            "center_points": self.center_points,
            "lambdas": self.lambdas,
            "gammas": self.gammas,
            "cell_regs": np.array([c.reg for c in self.cells]),
            "cell_diagnostics": np.array([c.diagnostic for c in self.cells]),
        }
        for j, cell in enumerate(self.cells):
            payload[f"alphas_{j}"] = cell.alphas
            payload[f"support_{j}"] = cell.support_inputs
        np.savez(path, **payload)

    @classmethod
    def load(cls, path) -> "LocalModel":
        with np.load(path, allow_pickle=False) as data:
            version = int(data["format_version"])
            if version != MODEL_FORMAT_VERSION:
                raise ValueError(f"unsupported model format version {version}")
            loss = str(data["loss"])
            clip_bound = float(data["clip_bound"])
            gammas = data["gammas"]
            regs = data["cell_regs"]
            diags = data["cell_diagnostics"]
            cells = tuple(
                DualSolution(
                    data[f"alphas_{j}"],
                    data[f"support_{j}"],
                    float(gammas[j]),
                    float(regs[j]),
                    loss,
                    clip_bound,
                    diagnostic=float(diags[j]),
                )
                for j in range(gammas.shape[0])
            )
            return cls(
                data["center_points"],
                cells,
                data["lambdas"],
                gammas,
                loss,
                clip_bound,
                int(data["n_train"]),
            )


def _per_cell(values, m: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 1:
        arr = np.full(m, arr[0])
    if arr.size != m:
        raise ValueError(f"{name} must be a scalar or have one entry per cell ({m})")
    if not (np.all(arr > 0.0) and np.all(np.isfinite(arr))):
        raise ValueError(f"{name} must be positive and finite")
    return arr


def clip_bound_for(ds: Dataset) -> float:
    """Largest |label| for regression (the Y-range bound M); 1 for hinge."""
    if ds.task == "classification":
        return 1.0
    peak = float(np.max(np.abs(ds.labels)))
    return peak if peak > 0.0 else 1.0


def fit(
    ds: Dataset,
    cells: int | CellPolicy,
    lambdas,
    gammas,
    cfg: SolverConfig | None = None,
    max_cell_points: int | None = None,
) -> LocalModel:
    """Train the localized estimator on a dataset.

    ``cells`` is either an explicit cell count (at most n) or a
    :class:`CellPolicy`.  ``lambdas`` and ``gammas`` may be scalars or
    per-cell vectors; cell j is trained with bandwidth gammas[j] and
    effective regularizer n * lambdas[j] / n_j.  Regression uses the
    least-squares solver, classification the hinge solver.  Solver failures
    are re-raised annotated with the offending cell index.
    """
    cfg = cfg or SolverConfig()
    if isinstance(cells, CellPolicy):
        m = cells.resolve(ds.n)
        if cells.kind == "cap" and max_cell_points is None:
            max_cell_points = int(cells.value)
    else:
        m = int(cells)
        if not 1 <= m <= ds.n:
            raise ValueError(f"cell count must lie in [1, {ds.n}], got {m}")

    part = build_partition(ds.features, m, max_cell_points=max_cell_points)
    if part.m != m:
        scalars = np.asarray(lambdas).size == 1 and np.asarray(gammas).size == 1
        if not scalars:
            raise ValueError(
                "per-cell hyperparameter vectors require a fixed cell count; "
                f"partition resolved to {part.m} cells instead of {m}"
            )
        m = part.m
    lam = _per_cell(lambdas, m, "lambdas")
    gam = _per_cell(gammas, m, "gammas")

    bound = clip_bound_for(ds)
    solutions = []
    for j in range(m):
        idx = np.flatnonzero(part.assignment == j)
        reg = effective_regularizer(ds.n, lam[j], idx.size)
        cell_cfg = SolverConfig(
            kkt_tolerance=cfg.kkt_tolerance,
            max_passes=cfg.max_passes,
            linear_solver=cfg.linear_solver,
            cg_tolerance=cfg.cg_tolerance,
            direct_solve_max=cfg.direct_solve_max,
            seed=derive_seed(cfg.seed, j),
        )
        try:
            if ds.task == "regression":
                sol = solve_krr(ds.features[idx], ds.labels[idx], gam[j], reg,
                                cell_cfg, clip_bound=bound)
            else:
                sol = solve_hinge_svm(ds.features[idx], ds.labels[idx], gam[j], reg,
                                      cell_cfg)
        except SolverError as exc:
            raise SolverError(f"cell {j}: {exc}", exc.measure) from exc
        solutions.append(sol)

    return LocalModel(part.center_points, tuple(solutions), lam, gam,
                      solutions[0].loss, bound, ds.n)
