"""L2-regularised linear SVM (hinge loss) and logistic regression.

Both solvers are deterministic.  The SVM is solved in the dual by cyclic
coordinate descent with the bias folded in as a constant feature (so the
bias is regularised too); logistic regression uses Newton steps with an
Armijo backtracking line search and leaves the intercept unpenalised.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.special import expit

from ..errors import DimensionMismatch


@dataclass
class LinearFit:
    weights: np.ndarray
    bias: float
    loss_history: list[float] = field(default_factory=list)
    grad_norm: float = np.inf
    n_iter: int = 0
    converged: bool = False


# --------------------------------------------------------------------- SVM


def svm_primal_objective(w: np.ndarray, b: float, X: np.ndarray, y01: np.ndarray, C: float) -> float:
    y = 2.0 * np.asarray(y01, dtype=np.float64) - 1.0
    margins = y * (X @ w + b)
    return 0.5 * (w @ w + b * b) + C * np.maximum(0.0, 1.0 - margins).sum()


@numba.njit(cache=True)
def _svm_dual_cd(Q, C, tol, max_iter):
    n = Q.shape[0]
    alpha = np.zeros(n)
    g = np.zeros(n)  # Q @ alpha
    history = np.empty(max_iter + 1)
    history[0] = 0.0
    pg_max = np.inf
    it = 0
    while it < max_iter:
        pg_max = 0.0
        for i in range(n):
            grad = g[i] - 1.0
            if alpha[i] <= 0.0:
                pg = min(grad, 0.0)
            elif alpha[i] >= C:
                pg = max(grad, 0.0)
            else:
                pg = grad
            if abs(pg) > pg_max:
                pg_max = abs(pg)
            if pg != 0.0 and Q[i, i] > 0.0:
                new = min(max(alpha[i] - grad / Q[i, i], 0.0), C)
                delta = new - alpha[i]
                if delta != 0.0:
                    alpha[i] = new
                    for j in range(n):
                        g[j] += delta * Q[j, i]
        it += 1
        obj = 0.0
        for i in range(n):
            obj += alpha[i] * (0.5 * g[i] - 1.0)
        history[it] = obj
        if pg_max <= tol:
            break
    return alpha, history[: it + 1], pg_max, it


def fit_linear_svm(X: np.ndarray, y01: np.ndarray, C: float = 1.0,
                   tol: float = 1e-6, max_iter: int = 10_000) -> LinearFit:
    """Minimise ``0.5 * (|w|^2 + b^2) + C * sum(hinge)`` via its dual.

    ``loss_history`` holds the dual objective ``0.5 a'Qa - sum(a)`` after each
    sweep; it never increases.  ``grad_norm`` is the largest projected dual
    gradient at exit.
    """
    X = np.asarray(X, dtype=np.float64)
    y = 2.0 * np.asarray(y01, dtype=np.float64) - 1.0
    Xa = np.hstack([X, np.ones((X.shape[0], 1))])
    Q = (y[:, None] * y[None, :]) * (Xa @ Xa.T)
    alpha, history, pg, n_iter = _svm_dual_cd(np.ascontiguousarray(Q), float(C), float(tol), int(max_iter))
    wa = Xa.T @ (alpha * y)
    return LinearFit(wa[:-1].copy(), float(wa[-1]), history.tolist(), float(pg), int(n_iter), bool(pg <= tol))


# ---------------------------------------------------------------------- LR


def logistic_objective(params: np.ndarray, X: np.ndarray, y01: np.ndarray, C: float = 1.0):
    """Loss ``0.5|w|^2 + C * sum(log(1 + exp(-y (Xw + b))))`` and its gradient.

    ``params`` is ``[w..., b]``; labels are 0/1.
    """
    w, b = params[:-1], params[-1]
    y = 2.0 * np.asarray(y01, dtype=np.float64) - 1.0
    m = y * (X @ w + b)
    loss = 0.5 * (w @ w) + C * np.logaddexp(0.0, -m).sum()
    r = -C * y * expit(-m)
    grad = np.empty_like(params)
    grad[:-1] = w + X.T @ r
    grad[-1] = r.sum()
    return loss, grad


def _logistic_hessian(params, X, C):
    z = X @ params[:-1] + params[-1]
    p = expit(z)
    s = C * p * (1.0 - p)
    Xa = np.hstack([X, np.ones((X.shape[0], 1))])
    H = (Xa * s[:, None]).T @ Xa
    H[np.arange(X.shape[1]), np.arange(X.shape[1])] += 1.0
    return H


def fit_logistic(X: np.ndarray, y01: np.ndarray, C: float = 1.0,
                 tol: float = 1e-6, max_iter: int = 10_000) -> LinearFit:
    X = np.asarray(X, dtype=np.float64)
    params = np.zeros(X.shape[1] + 1)
    loss, grad = logistic_objective(params, X, y01, C)
    history = [float(loss)]
    gnorm = float(np.linalg.norm(grad))
    it = 0
    while gnorm > tol and it < max_iter:
        H = _logistic_hessian(params, X, C)
        try:
            step = -np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(H, grad, rcond=None)[0]
        slope = grad @ step
        if slope >= 0:  # not a descent direction (numerically singular H)
            step, slope = -grad, -(grad @ grad)
        t = 1.0
        while True:
            cand = params + t * step
            cand_loss, cand_grad = logistic_objective(cand, X, y01, C)
            if cand_loss <= loss + 1e-4 * t * slope:
                break
            t *= 0.5
            if t < 1e-12:
                cand = None
                break
        it += 1
        if cand is None:
            break  # no further decrease representable in floating point
        params, loss, grad = cand, cand_loss, cand_grad
        history.append(float(loss))
        gnorm = float(np.linalg.norm(grad))
    return LinearFit(params[:-1].copy(), float(params[-1]), history, gnorm, it, gnorm <= tol)


def linear_score(weights: np.ndarray, bias: float, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != weights.size:
        raise DimensionMismatch(f"expected {weights.size} features, got {X.shape[-1]}")
    return X @ weights + bias
