"""Dense vector/matrix helpers: lp norms, dual-norm maximizers, power iteration.

Vectors are 1-d float64 arrays, matrices 2-d.  The norm exponent ``p`` is a
float >= 1 or ``numpy.inf``; ``numpy.inf`` plays the role of the symbolic
infinity everywhere.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "pnorm",
    "dual_exponent",
    "dual_maximizer",
    "power_iteration",
    "finite_diff_jacobian",
    "ConvergenceError",
]

POWER_ITERATION_TOL = 1e-10
POWER_ITERATION_MAX_ITER = 1000
POWER_ITERATION_RESIDUAL = 1e-8
FD_STEP = 1e-5


class ConvergenceError(RuntimeError):
    """Power iteration did not converge; carries the last iterate."""

    def __init__(self, msg, eigenvalue, vector):
        super().__init__(msg)
        self.eigenvalue = eigenvalue
        self.vector = vector


def _as_vector(v):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {v.shape}")
    return v


def _check_exponent(p):
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"norm exponent must satisfy p >= 1, got {p}")
    return p


def pnorm(v, p):
    """lp norm of ``v`` for p >= 1 or inf.

    General exponents are evaluated with max-factoring,
    ``m * (sum((|v_i|/m)**p))**(1/p)`` with ``m = max|v_i|``, so large entries
    do not overflow under ``**p``.
    """
    v = _as_vector(v)
    if v.size == 0:
        raise ValueError("pnorm of an empty vector is undefined")
    p = _check_exponent(p)
    a = np.abs(v)
    if np.isinf(p):
        return float(a.max())
    if p == 1.0:
        return float(a.sum())
    if p == 2.0:
        return float(np.sqrt(a @ a))
    m = float(a.max())
    if m == 0.0:
        return 0.0
    return float(m * (((a / m) ** p).sum()) ** (1.0 / p))


def dual_exponent(p):
    """Hoelder conjugate q with 1/p + 1/q = 1; maps 1 <-> inf and fixes 2."""
    p = _check_exponent(p)
    if np.isinf(p):
        return 1.0
    if p == 1.0:
        return np.inf
    return p / (p - 1.0)


def dual_maximizer(g, p, eps):
    """Maximize ``v . g`` over the lp ball of radius ``eps``.

    Returns ``(v, value)`` with ``||v||_p <= eps`` and
    ``value = eps * ||g||_q`` for the dual exponent q.  For p=1 the optimum
    concentrates on the largest-magnitude coordinate (ties broken to the
    lowest index); a zero gradient returns the zero vector.
    """
    g = _as_vector(g)
    p = _check_exponent(p)
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    a = np.abs(g)
    if not a.any():
        return np.zeros_like(g), 0.0
    q = dual_exponent(p)
    value = eps * pnorm(g, q)
    if p == 1.0:
        i = int(np.argmax(a))
        v = np.zeros_like(g)
        v[i] = eps * np.sign(g[i])
        return v, value
    if np.isinf(p):
        return eps * np.sign(g), value
    if p == 2.0:
        return eps * g / pnorm(g, 2.0), value
    # General p: v_i ~ sign(g_i) |g_i|^(q-1), rescaled onto the ball.
    # Working with |g|/max|g| keeps the powers in [0, 1].
    w = np.sign(g) * (a / a.max()) ** (q - 1.0)
    return eps * w / pnorm(w, p), value


def power_iteration(a, seed=0, tol=POWER_ITERATION_TOL,
                    max_iter=POWER_ITERATION_MAX_ITER):
    """Dominant eigenpair of a symmetric PSD matrix by power iteration.

    Starts from a seeded uniform random vector and stops once the iterate
    changes by less than ``tol``.  Returns ``(lambda_max, v_max)`` with
    ``v_max`` unit-norm; the result is checked to satisfy
    ``||A v - lambda v|| <= 1e-8 * max(|lambda|, 1)`` and a
    :class:`ConvergenceError` carrying the last iterate is raised otherwise.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"power iteration needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, n)
    x /= np.linalg.norm(x)
    lam = float(x @ (a @ x))
    for _ in range(max_iter):
        y = a @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            if not a.any():  # zero matrix: every unit vector is an eigenvector
                return 0.0, x
            x = rng.uniform(-1.0, 1.0, n)  # restarted out of the nullspace
            x /= np.linalg.norm(x)
            continue
        y /= ny
        lam = float(y @ (a @ y))
        done = np.linalg.norm(y - x) <= tol
        x = y
        if done:
            break
    resid = float(np.linalg.norm(a @ x - lam * x))
    if resid > POWER_ITERATION_RESIDUAL * max(abs(lam), np.finfo(float).tiny):
        raise ConvergenceError(
            f"power iteration stalled after {max_iter} iterations "
            f"(residual {resid:.3e})", lam, x)
    return lam, x


def finite_diff_jacobian(fn, x, h=FD_STEP):
    """Central-difference Jacobian of a vector function, column by column."""
    x = _as_vector(x)
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((np.asarray(fn(x + e), dtype=float)
                     - np.asarray(fn(x - e), dtype=float)) / (2.0 * h))
    return np.column_stack(cols)
