"""Farthest-first traversal centers, Voronoi assignment, covering diagnostics.

Center selection starts from the first input point and greedily adds the
point with maximum distance to the current center set (smallest index on
ties), an O(mn) 2-approximation of the metric k-center problem.  Assignment
compares exact squared Euclidean distances and breaks ties toward the
smaller center index.  The greedy insertion radii double as upper-bound
estimates of entropy numbers, from which a scaling-exponent dimension
estimate is derived.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_ASSIGN_CHUNK = 4_000_000  # distance-matrix entries per chunk


@dataclass(frozen=True)
class Partition:
    """Voronoi partition of a point set around greedily chosen centers.

    center_indices  : (m,) indices of the centers into the source points
    center_points   : (m, d) center coordinates (copied; self-contained)
    insertion_radii : (m,) distance of each center to the previously chosen
                      ones at selection time; entry 0 is +inf
    assignment      : (n,) cell index of every source point
    """

    center_indices: np.ndarray
    center_points: np.ndarray
    insertion_radii: np.ndarray
    assignment: np.ndarray

    @property
    def m(self) -> int:
        return self.center_points.shape[0]

    def cell_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.m)


def _check_points(points: np.ndarray) -> np.ndarray:
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("points must be a non-empty (n, d) matrix")
    if not np.all(np.isfinite(X)):
        raise ValueError("points contain non-finite entries")
    return X


def _greedy_centers(X: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Core farthest-first loop.

    Returns (center indices, insertion radii, final per-point squared
    distance to the chosen set).  The distance of already chosen points is
    forced to -1 so ties among unchosen points resolve to the smallest index.
    """
    n = X.shape[0]
    centers = np.empty(m, dtype=np.intp)
    radii = np.empty(m, dtype=np.float64)
    centers[0] = 0
    radii[0] = np.inf
    d2 = np.sum((X - X[0]) ** 2, axis=1)
    d2[0] = -1.0
    for k in range(1, m):
        nxt = int(np.argmax(d2))
        radii[k] = np.sqrt(max(d2[nxt], 0.0))
        centers[k] = nxt
        np.minimum(d2, np.sum((X - X[nxt]) ** 2, axis=1), out=d2)
        d2[nxt] = -1.0
    return centers, radii, d2


def voronoi_assign(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Index of the nearest center for every point, smaller index on ties.

    Comparisons use exact squared Euclidean distances computed from
    coordinate differences, so equidistant points resolve deterministically.
    """
    C = np.asarray(centers, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] < 1:
        raise ValueError("centers must be a non-empty (m, d) matrix")
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("points must be an (n, d) matrix")
    n, m = X.shape[0], C.shape[0]
    out = np.empty(n, dtype=np.intp)
    step = max(1, _ASSIGN_CHUNK // m)
    for start in range(0, n, step):
        chunk = X[start : start + step]
        d2 = np.sum((chunk[:, None, :] - C[None, :, :]) ** 2, axis=2)
        out[start : start + step] = np.argmin(d2, axis=1)
    return out


def fft_centers(points: np.ndarray, m: int) -> Partition:
    """Farthest-first traversal partition with ``m`` centers.

    The first center is the first input point; each later center maximizes
    the distance to the current set.  Runs in O(mn) via maintained
    nearest-center distances.
    """
    X = _check_points(points)
    if not 1 <= m <= X.shape[0]:
        raise ValueError(f"m must lie in [1, {X.shape[0]}], got {m}")
    centers, radii, _ = _greedy_centers(X, m)
    pts = X[centers].copy()
    return Partition(centers, pts, radii, voronoi_assign(X, pts))


def kcenter_radius(points: np.ndarray, centers: np.ndarray) -> float:
    """max over points of the distance to the closest center."""
    X = _check_points(points)
    C = np.asarray(centers, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] < 1:
        raise ValueError("centers must be a non-empty (m, d) matrix")
    best = np.full(X.shape[0], np.inf)
    for c in C:
        np.minimum(best, np.sum((X - c) ** 2, axis=1), out=best)
    return float(np.sqrt(best.max()))


def covering_radius_profile(points: np.ndarray, m_values) -> list[tuple[int, float]]:
    """Greedy covering radius after m centers, for each requested m.

    The value reported for m is the insertion radius of the (m+1)-th greedy
    center, i.e. the radius at which the first m centers cover the point
    set.  This is an upper bound on the true entropy number (within the
    factor-2 guarantee of the greedy traversal); m >= n yields 0.
    """
    X = _check_points(points)
    ms = [int(m) for m in m_values]
    if not ms or min(ms) < 1:
        raise ValueError("m_values must be positive integers")
    n = X.shape[0]
    if max(ms) > n:
        raise ValueError("each m must be at most the number of points")
    k = min(max(ms) + 1, n)
    _, radii, _ = _greedy_centers(X, k)
    # with all n points chosen the cover radius is exactly 0
    return [(m, 0.0 if m >= n else float(radii[m])) for m in ms]


# Alias matching the diagnostics vocabulary: greedy upper-bound estimates of
# the entropy numbers eps_m.
entropy_numbers = covering_radius_profile


def _dimension_grid(n: int) -> list[int]:
    """Fit window: every m in [max(16, n/128), max(n/8, twice that)].

    Using all integer center counts in the window (rather than a handful of
    doublings) averages out the jitter of the greedy radii; the lower edge
    skips the first few centers, whose radii decay at a transient rate.
    """
    lo = max(16, n // 128)
    hi = min(n, max(n // 8, 2 * lo))
    return list(range(lo, hi + 1))


def dimension_profile(points: np.ndarray) -> list[tuple[int, float]]:
    """(m, covering radius) pairs over the dimension-estimation window."""
    X = _check_points(points)
    if X.shape[0] < 64:
        raise ValueError("insufficient points: dimension estimation needs n >= 64")
    return covering_radius_profile(X, _dimension_grid(X.shape[0]))


def estimate_dimension(points: np.ndarray) -> float:
    """Scaling-exponent dimension estimate from greedy covering radii.

    Fits the least-squares slope s of log(radius) against log(m) over the
    geometric window and returns -1/s.  Radii decaying like m^(-1/dim)
    therefore recover dim.
    """
    profile = dimension_profile(points)
    ms = np.array([m for m, eps in profile], dtype=np.float64)
    eps = np.array([e for m, e in profile], dtype=np.float64)
    keep = eps > 0.0
    if keep.sum() < 2:
        raise ValueError("zero-diameter input")
    slope = np.polyfit(np.log(ms[keep]), np.log(eps[keep]), 1)[0]
    if slope >= 0.0:
        raise ValueError("covering radii do not decay; cannot estimate dimension")
    return float(-1.0 / slope)
