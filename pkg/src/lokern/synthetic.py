"""Self-contained synthetic dataset generators for experiments and tests."""

from __future__ import annotations

import numpy as np

from ._rng import derive_rng
from .dataset import Dataset


def uniform_square_regression(n: int, seed: int = 0, noise: float = 0.05) -> Dataset:
    """Uniform points on [-1, 1]^2 with y = cos(pi * x1) * x2 + noise."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = derive_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n, 2))
    y = np.cos(np.pi * X[:, 0]) * X[:, 1] + noise * rng.standard_normal(n)
    return Dataset(X, y, "regression")


def two_moons_classification(n: int, seed: int = 0, noise: float = 0.15) -> Dataset:
    """Two interleaved half circles with +-1 labels and Gaussian jitter."""
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = derive_rng(seed)
    n_up = n // 2
    n_dn = n - n_up
    t_up = rng.uniform(0.0, np.pi, n_up)
    t_dn = rng.uniform(0.0, np.pi, n_dn)
    upper = np.column_stack([np.cos(t_up), np.sin(t_up)])
    lower = np.column_stack([1.0 - np.cos(t_dn), 0.5 - np.sin(t_dn)])
    X = np.vstack([upper, lower]) + noise * rng.standard_normal((n, 2))
    y = np.concatenate([np.ones(n_up), -np.ones(n_dn)])
    order = rng.permutation(n)
    return Dataset(X[order], y[order], "classification")


GENERATORS = {
    "uniform-square": uniform_square_regression,
    "two-moons": two_moons_classification,
}

GENERATOR_TASKS = {
    "uniform-square": "regression",
    "two-moons": "classification",
}


def make_synthetic(name: str, n: int, seed: int = 0) -> Dataset:
    """Generate one of the named synthetic datasets."""
    try:
        return GENERATORS[name](n, seed=seed)
    except KeyError:
        raise ValueError(
            f"unknown synthetic dataset {name!r}; available: {sorted(GENERATORS)}"
        ) from None
