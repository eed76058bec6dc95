"""Localized Gaussian-kernel learning on farthest-first Voronoi partitions.

The library trains kernel ridge regression and hinge-loss SVMs cell by cell
on a data-dependent Voronoi partition, selects hyperparameters per cell on a
validation split or by cross validation, and ships the dimension-inflating
embedding plus intrinsic-dimension diagnostics used by the experiment CLI.
"""

from .dataset import (
    AffineTransform,
    Dataset,
    DatasetError,
    SplitSpec,
    load_csv,
    naive_error,
    standardize,
    train_test_split,
)
from .embedding import (
    EmbeddingSpec,
    embed,
    embed_dataset,
    embed_matrix,
    sample_embedding,
    sine_features,
)
from .experiment import (
    ExperimentConfig,
    ExperimentReport,
    diagnose,
    emit_report,
    run_experiment,
)
from .kernels import (
    GaussianKernel,
    LocalizedKernel,
    cross_gram,
    gauss_eval,
    gram_matrix,
    localized_eval,
)
from .local_model import CellPolicy, LocalModel, build_partition, fit
from .model_selection import (
    HyperGrid,
    SelectionResult,
    kfold_cv,
    make_geometric_grid,
    make_grids,
    train_validate,
)
from .partition import (
    Partition,
    entropy_numbers,
    estimate_dimension,
    fft_centers,
    kcenter_radius,
    voronoi_assign,
)
from .solvers import (
    DualSolution,
    SolverConfig,
    SolverError,
    clip,
    empirical_risk,
    solve_hinge_svm,
    solve_krr,
)
from .synthetic import make_synthetic, two_moons_classification, uniform_square_regression

__version__ = "0.1.0"

__all__ = [
    "AffineTransform",
    "CellPolicy",
    "Dataset",
    "DatasetError",
    "DualSolution",
    "EmbeddingSpec",
    "ExperimentConfig",
    "ExperimentReport",
    "GaussianKernel",
    "HyperGrid",
    "LocalModel",
    "LocalizedKernel",
    "Partition",
    "SelectionResult",
    "SolverConfig",
    "SolverError",
    "SplitSpec",
    "build_partition",
    "clip",
    "cross_gram",
    "diagnose",
    "embed",
    "embed_dataset",
    "embed_matrix",
    "emit_report",
    "empirical_risk",
    "entropy_numbers",
    "estimate_dimension",
    "fft_centers",
    "fit",
    "gauss_eval",
    "gram_matrix",
    "kcenter_radius",
    "kfold_cv",
    "load_csv",
    "localized_eval",
    "make_geometric_grid",
    "make_grids",
    "make_synthetic",
    "naive_error",
    "run_experiment",
    "sample_embedding",
    "sine_features",
    "solve_hinge_svm",
    "solve_krr",
    "standardize",
    "train_test_split",
    "train_validate",
    "two_moons_classification",
    "uniform_square_regression",
    "voronoi_assign",
]
