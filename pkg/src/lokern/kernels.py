"""Gaussian kernel, its cell-localized variant, and Gram matrix assembly.

The localized kernel is zero for point pairs in different Voronoi cells and
a 1/weight-scaled Gaussian within a cell, which makes its Gram matrix block
diagonal once points are grouped by cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .partition import voronoi_assign

PSD_TOL = 1e-8  # eigenvalue tolerance for positive-semidefiniteness checks


@dataclass(frozen=True)
class GaussianKernel:
    """k(x, y) = exp(-||x - y||^2 / gamma^2)."""

    gamma: float

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError("gamma must be positive and finite")


@dataclass(frozen=True)
class LocalizedKernel:
    """Per-cell Gaussian kernel vanishing across Voronoi cells.

    Points route to the nearest of ``center_points`` (smaller index on
    ties); within cell j the kernel is exp(-r^2 / gammas[j]^2) / lambdas[j].
    """

    center_points: np.ndarray
    gammas: np.ndarray
    lambdas: np.ndarray

    def __post_init__(self):
        C = np.asarray(self.center_points, dtype=np.float64)
        g = np.asarray(self.gammas, dtype=np.float64).ravel()
        lam = np.asarray(self.lambdas, dtype=np.float64).ravel()
        if C.ndim != 2 or C.shape[0] < 1:
            raise ValueError("center_points must be a non-empty (m, d) matrix")
        if g.shape[0] != C.shape[0] or lam.shape[0] != C.shape[0]:
            raise ValueError("gammas and lambdas must have one entry per cell")
        if not (np.all(g > 0.0) and np.all(np.isfinite(g))):
            raise ValueError("gammas must be positive and finite")
        if not (np.all(lam > 0.0) and np.all(np.isfinite(lam))):
            raise ValueError("lambdas must be positive and finite")
        object.__setattr__(self, "center_points", C)
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "lambdas", lam)

    @property
    def m(self) -> int:
        return self.center_points.shape[0]


def gauss_eval(ker: GaussianKernel, x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError("x and y must have the same dimension")
    return float(np.exp(-np.sum((x - y) ** 2) / ker.gamma**2))


def localized_eval(lk: LocalizedKernel, x: np.ndarray, y: np.ndarray) -> float:
    """0 if x and y fall in different cells, else the scaled Gaussian value."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    jx, jy = voronoi_assign(np.vstack([x, y]), lk.center_points)
    if jx != jy:
        return 0.0
    return float(
        np.exp(-np.sum((x - y) ** 2) / lk.gammas[jx] ** 2) / lk.lambdas[jx]
    )


def gram_matrix(ker, points: np.ndarray) -> np.ndarray:
    """Symmetric kernel matrix; upper triangle computed and mirrored."""
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("points must be a non-empty (n, d) matrix")
    if isinstance(ker, GaussianKernel):
        d2 = squareform(pdist(X, "sqeuclidean"))
        return np.exp(-d2 / ker.gamma**2)
    if isinstance(ker, LocalizedKernel):
        assign = voronoi_assign(X, ker.center_points)
        K = np.zeros((X.shape[0], X.shape[0]))
        for j in np.unique(assign):
            idx = np.flatnonzero(assign == j)
            d2 = squareform(pdist(X[idx], "sqeuclidean"))
            K[np.ix_(idx, idx)] = np.exp(-d2 / ker.gammas[j] ** 2) / ker.lambdas[j]
        return K
    raise TypeError(f"unsupported kernel type {type(ker).__name__}")


def cross_gram(ker: GaussianKernel, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Rectangular Gaussian kernel matrix between two point sets."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    return np.exp(-cdist(A, B, "sqeuclidean") / ker.gamma**2)
