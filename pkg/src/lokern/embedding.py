"""Dimension-inflating embedding: x -> T (x, sin<x, w_1>, ..., sin<x, w_p>).

Frequencies w_j are sampled uniformly on [-pi, pi]^d and T is a Haar-random
orthogonal matrix, so the image of a d-dimensional cloud is a rotated graph
of a smooth map: intrinsically still d-dimensional inside R^(d+p), and the
map never shrinks distances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import derive_rng
from .dataset import Dataset

ORTHOGONALITY_TOL = 1e-10


@dataclass(frozen=True)
class EmbeddingSpec:
    """Sampled embedding parameters.

    frequencies : (p, d) matrix with entries in [-pi, pi]
    rotation    : (d+p, d+p) orthogonal matrix
    """

    d: int
    p: int
    frequencies: np.ndarray
    rotation: np.ndarray
    seed: int = 0

    def __post_init__(self):
        W = np.asarray(self.frequencies, dtype=np.float64).reshape(self.p, self.d)
        T = np.asarray(self.rotation, dtype=np.float64)
        if self.d < 1 or self.p < 0:
            raise ValueError("need d >= 1 and p >= 0")
        if T.shape != (self.d + self.p, self.d + self.p):
            raise ValueError("rotation must be square of size d + p")
        if W.size and np.max(np.abs(W)) > np.pi + 1e-12:
            raise ValueError("frequency entries must lie in [-pi, pi]")
        gram_err = np.linalg.norm(T.T @ T - np.eye(T.shape[0]))
        if gram_err > ORTHOGONALITY_TOL:
            raise ValueError(f"rotation is not orthogonal (||T'T - I|| = {gram_err:.2e})")
        object.__setattr__(self, "frequencies", W)
        object.__setattr__(self, "rotation", T)


def sample_embedding(d: int, p: int, seed: int = 0) -> EmbeddingSpec:
    """Draw frequencies and a Haar-distributed rotation from one seed.

    The rotation is the orthogonal factor of a standard-normal matrix with
    the R-diagonal sign correction that makes the factorization unique (and
    the distribution exactly Haar).  Frequencies are drawn first, then the
    rotation, so p = 0 yields a pure d x d rotation.
    """
    if d < 1 or p < 0:
        raise ValueError("need d >= 1 and p >= 0")
    rng = derive_rng(seed)
    freqs = rng.uniform(-np.pi, np.pi, size=(p, d))
    gauss = rng.standard_normal((d + p, d + p))
    q, r = np.linalg.qr(gauss)
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return EmbeddingSpec(d, p, freqs, q * signs, seed)


def sine_features(spec: EmbeddingSpec, X: np.ndarray) -> np.ndarray:
    """(n, p) matrix of sin<x_i, w_j> values (empty when p = 0)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != spec.d:
        raise ValueError(f"expected {spec.d}-dimensional inputs, got {X.shape[1]}")
    return np.sin(X @ spec.frequencies.T)


def embed_matrix(spec: EmbeddingSpec, X: np.ndarray) -> np.ndarray:
    """Row-wise embedding of an (n, d) matrix into R^(d+p)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    stacked = np.hstack([X, sine_features(spec, X)])
    return stacked @ spec.rotation.T


def embed(spec: EmbeddingSpec, x: np.ndarray) -> np.ndarray:
    """Embed a single d-vector."""
    x = np.asarray(x, dtype=np.float64).ravel()
    return embed_matrix(spec, x[None, :])[0]


def embed_dataset(spec: EmbeddingSpec, ds: Dataset) -> Dataset:
    """Embed every feature row; labels are unchanged."""
    if ds.d != spec.d:
        raise ValueError(f"dataset dimension {ds.d} does not match embedding ({spec.d})")
    return Dataset(embed_matrix(spec, ds.features), ds.labels, ds.task)
