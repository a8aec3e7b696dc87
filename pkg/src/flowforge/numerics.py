"""Numerical kernels: limited-memory BFGS and a Jacobi eigensolver.

Both are self-contained on top of numpy arrays. The optimizer uses the
classic two-loop recursion with Armijo backtracking, so accepted steps are
monotone non-increasing in the objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OptimizationError


@dataclass
class OptResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    # (iteration, objective, grad inf-norm) per accepted step
    trace: list[tuple[int, float, float]] = field(default_factory=list)


def lbfgs_minimize(
    fg,
    x0,
    m: int = 10,
    max_iters: int = 100,
    tol: float = 1e-6,
    armijo_c: float = 1e-4,
    shrink: float = 0.5,
    max_backtracks: int = 60,
) -> OptResult:
    """Minimize f given ``fg(x) -> (f, grad)``.

    Stops when the gradient inf-norm drops to ``tol`` or after ``max_iters``
    accepted steps. Non-finite objective or gradient at an accepted point is
    an error; non-finite trial points during the line search just shrink the
    step.
    """
    if m < 1:
        raise ValueError("history size m must be >= 1")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")

    x = np.asarray(x0, dtype=float).copy()
    f, g = fg(x)
    g = np.asarray(g, dtype=float)
    _check_finite(f, g)

    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    rho_hist: list[float] = []
    trace: list[tuple[int, float, float]] = [(0, float(f), float(np.max(np.abs(g))))]

    for k in range(1, max_iters + 1):
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= tol:
            return OptResult(x, float(f), k - 1, True, trace)

        direction = -_two_loop(g, s_hist, y_hist, rho_hist)
        if float(np.dot(direction, g)) >= 0:
            direction = -g  # fall back to steepest descent

        alpha = _armijo(fg, x, f, g, direction, armijo_c, shrink, max_backtracks)
        if alpha is None:
            # no acceptable step in this direction: give up cleanly
            return OptResult(x, float(f), k - 1, False, trace)

        x_new = x + alpha * direction
        f_new, g_new = fg(x_new)
        g_new = np.asarray(g_new, dtype=float)
        _check_finite(f_new, g_new)

        s = x_new - x
        y = g_new - g
        sy = float(np.dot(s, y))
        if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)) and sy > 0:
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > m:
                s_hist.pop(0)
                y_hist.pop(0)
                rho_hist.pop(0)
        else:
            # Armijo alone cannot guarantee the curvature condition; a stale
            # memory then yields vanishing steps, so restart it instead.
            s_hist.clear()
            y_hist.clear()
            rho_hist.clear()

        x, f, g = x_new, f_new, g_new
        trace.append((k, float(f), float(np.max(np.abs(g)))))

    converged = float(np.max(np.abs(g))) <= tol
    return OptResult(x, float(f), max_iters, converged, trace)


def _two_loop(g: np.ndarray, s_hist, y_hist, rho_hist) -> np.ndarray:
    q = g.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
        a = rho * float(np.dot(s, q))
        alphas.append(a)
        q -= a * y
    if s_hist:
        gamma = float(np.dot(s_hist[-1], y_hist[-1])) / float(np.dot(y_hist[-1], y_hist[-1]))
        q *= gamma
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
        b = rho * float(np.dot(y, q))
        q += (a - b) * s
    return q


def _armijo(fg, x, f0, g0, direction, c, shrink, max_backtracks):
    slope = float(np.dot(g0, direction))
    alpha = 1.0
    for _ in range(max_backtracks):
        f_try, _ = fg(x + alpha * direction)
        if np.isfinite(f_try) and f_try <= f0 + c * alpha * slope:
            return alpha
        alpha *= shrink
    return None


def _check_finite(f, g):
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise OptimizationError("non-finite objective or gradient")


def jacobi_eigen(matrix, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues descending and
    eigenvectors as orthonormal columns. Each eigenvector's largest-magnitude
    entry is made positive so the decomposition is deterministic.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if a.shape[0] == 0:
        raise ValueError("matrix must be non-empty")
    if float(np.max(np.abs(a - a.T))) > 1e-12:
        raise ValueError("matrix is not symmetric within 1e-12")

    n = a.shape[0]
    a = (a + a.T) / 2.0
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * max(1.0, float(np.max(np.abs(np.diag(a))))):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/columns p and q in place
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = v[:, order]
    for j in range(n):
        col = vectors[:, j]
        k = int(np.argmax(np.abs(col)))
        if col[k] < 0:
            vectors[:, j] = -col
    return eigenvalues, vectors
