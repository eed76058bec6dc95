"""Per-cell regularized kernel solvers: ridge regression and hinge-loss SVM.

Both solvers minimize  reg * ||f||_H^2 + (1/n) * sum L(y_i, f(x_i))  over the
Gaussian RKHS, without an intercept term.

Least squares reduces to the linear system (K + n*reg*I) alpha = y, solved by
Cholesky up to ``direct_solve_max`` points and by conjugate gradient above,
with iterative refinement until the relative residual meets ``cg_tolerance``.

The hinge loss is solved in its bias-free dual
    max  sum beta_i - 0.5 * beta^T Q beta,  Q_ik = y_i y_k K_ik,
    s.t. 0 <= beta_i <= C,  C = 1 / (2 * reg * n),
by coordinate descent over seeded random permutations.  The decision function
is f(x) = sum beta_i y_i k(x_i, x), so the stored representer coefficients
are alpha_i = beta_i * y_i and the box bound shrinks to 0 as reg grows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize
from scipy.sparse.linalg import cg as _cg

from ._rng import derive_rng
from .kernels import GaussianKernel, cross_gram, gram_matrix

LOSSES = ("least_squares", "hinge")

_REFINEMENT_STEPS = 4


class SolverError(RuntimeError):
    """Solver failed to reach its tolerance; carries the last measure."""

    def __init__(self, message: str, measure: float = np.nan):
        super().__init__(message)
        self.measure = measure


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs shared by both solvers.

    linear_solver "auto" picks Cholesky for at most ``direct_solve_max``
    points and conjugate gradient above; ``max_passes`` bounds both CG
    iterations and coordinate-descent sweeps.
    """

    kkt_tolerance: float = 1e-6
    max_passes: int = 10_000
    linear_solver: str = "auto"  # "auto" | "cholesky_direct" | "conjugate_gradient"
    cg_tolerance: float = 1e-8
    direct_solve_max: int = 4096
    seed: int = 0

    def __post_init__(self):
        if self.kkt_tolerance <= 0.0 or self.cg_tolerance <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_passes < 1:
            raise ValueError("max_passes must be positive")
        if self.linear_solver not in ("auto", "cholesky_direct", "conjugate_gradient"):
            raise ValueError(f"unknown linear_solver {self.linear_solver!r}")


@dataclass(frozen=True)
class DualSolution:
    """Trained decision function of one cell: f(x) = sum_i alphas[i] k(x_i, x).

    ``reg`` is the effective regularizer of the cell objective and
    ``diagnostic`` the final residual (least squares) or KKT violation
    (hinge).
    """

    alphas: np.ndarray
    support_inputs: np.ndarray
    gamma: float
    reg: float
    loss: str
    clip_bound: float
    diagnostic: float = np.nan
    passes: int = 0

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}")
        if not np.all(np.isfinite(self.alphas)):
            raise ValueError("non-finite dual coefficients")
        if not self.clip_bound > 0.0:
            raise ValueError("clip bound must be positive")

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        """Unclipped decision values at the rows of X.

        Row-wise multiply-and-reduce keeps each output bit-identical no
        matter how the rows are batched (BLAS matvec kernels do not).
        """
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[0] == 0:
            return np.empty(0)
        K = cross_gram(GaussianKernel(self.gamma), X, self.support_inputs)
        return (K * self.alphas).sum(axis=1)


def clip(t, bound: float):
    """Truncate to [-bound, bound]; works on scalars and arrays."""
    if not bound > 0.0:
        raise ValueError("clip bound must be positive")
    clipped = np.minimum(np.maximum(t, -bound), bound)
    return float(clipped) if np.isscalar(t) else clipped


def _validate_problem(points, labels, gamma, reg):
    X = np.atleast_2d(np.asarray(points, dtype=np.float64))
    y = np.asarray(labels, dtype=np.float64).ravel()
    if X.shape[0] != y.shape[0] or X.shape[0] < 1:
        raise ValueError("points and labels must be non-empty and aligned")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite training data")
    if not (np.isfinite(gamma) and gamma > 0.0):
        raise ValueError("gamma must be positive and finite")
    if not (np.isfinite(reg) and reg > 0.0):
        raise ValueError("reg must be positive and finite")
    return X, y


def _gram(points, gamma, gram):
    if gram is not None:
        K = np.asarray(gram, dtype=np.float64)
        if K.shape != (points.shape[0], points.shape[0]):
            raise ValueError("provided gram matrix has the wrong shape")
        return K
    return gram_matrix(GaussianKernel(gamma), points)


def solve_krr(
    points,
    labels,
    gamma: float,
    reg: float,
    cfg: SolverConfig | None = None,
    clip_bound: float | None = None,
    gram: np.ndarray | None = None,
) -> DualSolution:
    """Kernel ridge regression: solve (K + n*reg*I) alpha = y.

    ``gram`` may supply a precomputed kernel matrix for ``points``.  Raises
    :class:`SolverError` if the relative residual cannot be brought below
    ``cfg.cg_tolerance``.
    """
    cfg = cfg or SolverConfig()
    X, y = _validate_problem(points, labels, gamma, reg)
    n = X.shape[0]
    K = _gram(X, gamma, gram)
    A = K + (n * reg) * np.eye(n)
    y_norm = float(np.linalg.norm(y))

    direct = cfg.linear_solver == "cholesky_direct" or (
        cfg.linear_solver == "auto" and n <= cfg.direct_solve_max
    )
    if direct:
        try:
            factor = sla.cho_factor(A, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"Cholesky factorization failed: {exc}") from exc
        alpha = sla.cho_solve(factor, y, check_finite=False)
        solve_step = lambda r: sla.cho_solve(factor, r, check_finite=False)
    else:
        alpha, info = _cg(A, y, rtol=cfg.cg_tolerance, atol=0.0, maxiter=cfg.max_passes)
        if info > 0:
            res = float(np.linalg.norm(A @ alpha - y))
            raise SolverError(
                f"conjugate gradient did not converge within {cfg.max_passes} "
                f"iterations (residual {res:.3e})",
                res,
            )
        solve_step = lambda r: _cg(A, r, rtol=1e-2, atol=0.0, maxiter=cfg.max_passes)[0]

    residual = float(np.linalg.norm(A @ alpha - y))
    for _ in range(_REFINEMENT_STEPS):
        if residual <= cfg.cg_tolerance * y_norm:
            break
        alpha = alpha + solve_step(y - A @ alpha)
        residual = float(np.linalg.norm(A @ alpha - y))
    if residual > cfg.cg_tolerance * y_norm:
        raise SolverError(
            f"linear solve residual {residual:.3e} exceeds "
            f"{cfg.cg_tolerance:.1e} * ||y||",
            residual,
        )

    bound = clip_bound if clip_bound is not None else _default_bound(y)
    return DualSolution(alpha, X.copy(), float(gamma), float(reg), "least_squares",
                        bound, diagnostic=residual)


def _default_bound(y: np.ndarray) -> float:
    peak = float(np.max(np.abs(y))) if y.size else 0.0
    return peak if peak > 0.0 else 1.0


def _box_kkt_violation(beta: np.ndarray, grad: np.ndarray, C: float) -> float:
    viol = np.where(beta <= 0.0, np.maximum(grad, 0.0),
                    np.where(beta >= C, np.maximum(-grad, 0.0), np.abs(grad)))
    return float(viol.max())


def _polish_box_qp(K, y, beta, C):
    """Quasi-Newton polish of the dual from the current iterate.

    Coordinate descent zigzags on nearly singular kernel matrices (wide
    bandwidths make all entries approach 1); a bounded L-BFGS-B descent on
    the negative dual cuts through that flat valley, after which coordinate
    sweeps finish the remaining coordinates.  Deterministic.
    """
    fun = lambda b: 0.5 * b @ (y * (K @ (y * b))) - b.sum()
    jac = lambda b: y * (K @ (y * b)) - 1.0
    res = minimize(fun, beta, jac=jac, method="L-BFGS-B",
                   bounds=[(0.0, C)] * beta.size,
                   options=dict(maxiter=2000, ftol=0.0, gtol=1e-9, maxcor=50))
    return np.minimum(np.maximum(res.x, 0.0), C)


def solve_hinge_svm(
    points,
    labels,
    gamma: float,
    reg: float,
    cfg: SolverConfig | None = None,
    gram: np.ndarray | None = None,
    warm_start: np.ndarray | None = None,
) -> DualSolution:
    """Hinge-loss SVM via dual coordinate descent over the box [0, C]^n.

    Sweeps coordinates in a freshly seeded random permutation each pass and
    stops once the largest KKT violation (projected gradient of the dual)
    over a full recheck is at most ``cfg.kkt_tolerance``.  ``warm_start``
    seeds the dual variables (projected into the box); passing the previous
    solution along a descending-regularization path avoids the slow tail of
    coordinate descent on nearly singular kernel matrices.
    """
    cfg = cfg or SolverConfig()
    X, y = _validate_problem(points, labels, gamma, reg)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("hinge labels must be exactly -1 or +1")
    n = X.shape[0]
    K = _gram(X, gamma, gram)
    C = 1.0 / (2.0 * reg * n)
    rng = derive_rng(cfg.seed)

    if warm_start is not None:
        beta = np.minimum(np.maximum(np.asarray(warm_start, dtype=np.float64), 0.0), C)
    else:
        beta = np.zeros(n)
    fvals = K @ (beta * y)  # decision values at the training points
    violation = _box_kkt_violation(beta, 1.0 - y * fvals, C)
    passes = 0
    next_polish = 10
    diag = np.diag(K)
    while violation > cfg.kkt_tolerance and passes < cfg.max_passes:
        passes += 1
        for i in rng.permutation(n):
            grad = 1.0 - y[i] * fvals[i]  # dual ascent direction
            new = min(max(beta[i] + grad / diag[i], 0.0), C)
            delta = new - beta[i]
            if delta != 0.0:
                beta[i] = new
                fvals += (delta * y[i]) * K[i]
        # exact recheck, free of incremental drift
        fvals = K @ (beta * y)
        violation = _box_kkt_violation(beta, 1.0 - y * fvals, C)
        if violation > cfg.kkt_tolerance and passes >= next_polish:
            next_polish = 2 * passes
            beta = _polish_box_qp(K, y, beta, C)
            fvals = K @ (beta * y)
            violation = _box_kkt_violation(beta, 1.0 - y * fvals, C)
    if violation > cfg.kkt_tolerance:
        raise SolverError(
            f"coordinate descent did not converge within {cfg.max_passes} passes "
            f"(max KKT violation {violation:.3e})",
            violation,
        )
    return DualSolution(beta * y, X.copy(), float(gamma), float(reg), "hinge",
                        1.0, diagnostic=violation, passes=passes)


def empirical_risk(loss: str, predictions, labels) -> float:
    """Mean loss of predictions against labels.

    "least_squares": (y - t)^2; "hinge": max(0, 1 - y*t); "zero_one":
    misclassification rate of sign(t) with sign(0) := +1.
    """
    t = np.asarray(predictions, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if t.shape != y.shape or t.size < 1:
        raise ValueError("predictions and labels must be non-empty and aligned")
    if loss == "least_squares":
        return float(np.mean((y - t) ** 2))
    if loss == "hinge":
        return float(np.mean(np.maximum(0.0, 1.0 - y * t)))
    if loss == "zero_one":
        signs = np.where(t >= 0.0, 1.0, -1.0)
        return float(np.mean(signs != y))
    raise ValueError(f"unknown loss {loss!r}")


def krr_objective(K: np.ndarray, alphas: np.ndarray, labels: np.ndarray,
                  reg: float) -> float:
    """reg * alpha^T K alpha + mean((y - K alpha)^2)."""
    fvals = K @ alphas
    return float(reg * alphas @ K @ alphas + np.mean((labels - fvals) ** 2))


def hinge_primal_objective(K: np.ndarray, alphas: np.ndarray, labels: np.ndarray,
                           reg: float) -> float:
    """reg * alpha^T K alpha + mean hinge loss at the training points."""
    fvals = K @ alphas
    return float(reg * alphas @ K @ alphas
                 + np.mean(np.maximum(0.0, 1.0 - labels * fvals)))


def hinge_dual_objective(K: np.ndarray, beta: np.ndarray, labels: np.ndarray,
                         reg: float) -> float:
    """Dual value on the original objective scale (equals the primal at the
    optimum): 2*reg*(sum beta - 0.5 beta^T Q beta)."""
    q = beta * labels
    return float(2.0 * reg * (beta.sum() - 0.5 * q @ K @ q))
