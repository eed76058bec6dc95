"""Independent reference implementations used to check the library.

Everything here is deliberately brute force or first principles: exhaustive
subset search for the k-center optimum, an accelerated projected-gradient
solver for box-constrained duals, dense grid search, and finite differences.
None of it shares code paths with the solvers under test.
"""

from __future__ import annotations

import itertools

import numpy as np


def brute_force_kcenter_radius(points: np.ndarray, m: int) -> float:
    """Exact k-center optimum by enumerating all size-m center subsets."""
    X = np.asarray(points, dtype=np.float64)
    n = X.shape[0]
    best = np.inf
    for subset in itertools.combinations(range(n), m):
        C = X[list(subset)]
        d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
        radius = np.sqrt(d2.min(axis=1).max())
        best = min(best, radius)
    return float(best)


def box_qp_maximize(Q: np.ndarray, C: float, iters: int = 200_000,
                    tol: float = 1e-14) -> np.ndarray:
    """Maximize sum(beta) - 0.5 beta'Q beta over [0, C]^n.

    Accelerated projected gradient with a fixed 1/L step; Q must be
    symmetric positive semidefinite.  Returns the final iterate.
    """
    n = Q.shape[0]
    L = float(np.linalg.eigvalsh(Q)[-1])
    step = 1.0 / max(L, 1e-12)
    beta = np.zeros(n)
    z = beta.copy()
    t = 1.0
    for _ in range(iters):
        grad = 1.0 - Q @ z
        beta_new = np.clip(z + step * grad, 0.0, C)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = beta_new + ((t - 1.0) / t_new) * (beta_new - beta)
        if np.max(np.abs(beta_new - beta)) < tol:
            return beta_new
        beta, t = beta_new, t_new
    return beta


def box_qp_kkt_violation(Q: np.ndarray, beta: np.ndarray, C: float) -> float:
    """Max projected-gradient magnitude of the box QP at beta."""
    grad = 1.0 - Q @ beta
    viol = np.where(beta <= 0.0, np.maximum(grad, 0.0),
                    np.where(beta >= C, np.maximum(-grad, 0.0), np.abs(grad)))
    return float(viol.max())


def grid_qp_maximize(Q: np.ndarray, C: float, steps: int = 1001) -> np.ndarray:
    """Dense grid search over [0, C]^2 (two variables only)."""
    assert Q.shape == (2, 2)
    axis = np.linspace(0.0, C, steps)
    B1, B2 = np.meshgrid(axis, axis, indexing="ij")
    val = (B1 + B2
           - 0.5 * (Q[0, 0] * B1**2 + 2.0 * Q[0, 1] * B1 * B2 + Q[1, 1] * B2**2))
    flat = np.argmax(val)
    return np.array([B1.flat[flat], B2.flat[flat]])


def hinge_primal(K: np.ndarray, alphas: np.ndarray, y: np.ndarray,
                 reg: float) -> float:
    fvals = K @ alphas
    return float(reg * alphas @ K @ alphas
                 + np.mean(np.maximum(0.0, 1.0 - y * fvals)))


def krr_objective(K: np.ndarray, alphas: np.ndarray, y: np.ndarray,
                  reg: float) -> float:
    fvals = K @ alphas
    return float(reg * alphas @ K @ alphas + np.mean((y - fvals) ** 2))


def finite_difference_gradient(fun, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function."""
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return g


def localized_cross_kernel(center_points, gammas, lambdas, A, B) -> np.ndarray:
    """Entrywise localized-kernel matrix between two point sets (loop form)."""
    from lokern.partition import voronoi_assign

    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    ja = voronoi_assign(A, center_points)
    jb = voronoi_assign(B, center_points)
    out = np.zeros((A.shape[0], B.shape[0]))
    for i in range(A.shape[0]):
        for k in range(B.shape[0]):
            if ja[i] == jb[k]:
                j = ja[i]
                d2 = np.sum((A[i] - B[k]) ** 2)
                out[i, k] = np.exp(-d2 / gammas[j] ** 2) / lambdas[j]
    return out
