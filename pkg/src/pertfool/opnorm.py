"""Regression attacks: maximize the output l2 change under an lp input budget.

For a locally linear model the achievable gain is the operator norm of the
Jacobian from lp to l2.  Three exponents have tractable maximizers: p=2 (top
eigenvector of J^T J), p=1 (whole budget on the strongest column, a
single-coordinate attack), and p=inf via exact sign-vertex enumeration, which
is exponential in the input dimension and therefore capped; the general
p=inf problem is NP-hard.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import forward, jacobian
from .numeric import power_iteration

__all__ = [
    "RegressionAttackResult",
    "regression_objective",
    "attack_l2",
    "attack_l1",
    "attack_linf_bruteforce",
    "network_regression_attack",
]

BRUTEFORCE_MAX_DIM = 16


@dataclass(eq=False)
class RegressionAttackResult:
    """Perturbation with its linearized output gain ``||J eta||_2``."""

    eta: np.ndarray
    output_gain: float
    opnorm_estimate: float
    exact: bool
    degenerate: bool = False


def _as_matrix(j):
    j = np.asarray(j, dtype=float)
    if j.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {j.shape}")
    return j


def regression_objective(j, eta):
    """l2 norm of the linearized output change ``J @ eta``."""
    j = _as_matrix(j)
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (j.shape[1],):
        raise ValueError(
            f"perturbation shape {eta.shape} does not match {j.shape[1]} columns")
    return float(np.linalg.norm(j @ eta))


def attack_l2(j, eps, seed=0):
    """Spend the l2 budget along the top right singular direction of J."""
    j = _as_matrix(j)
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    _, v = power_iteration(j.T @ j, seed=seed)
    eta = eps * v
    gain = regression_objective(j, eta)
    return RegressionAttackResult(
        eta=eta, output_gain=gain, opnorm_estimate=gain / eps, exact=True)


def attack_l1(j, eps):
    """Spend the l1 budget on the column with the largest l2 norm.

    The optimum of the l1-constrained problem sits on a single coordinate
    (ties at the lowest index), which makes this a single-coordinate attack.
    A zero matrix is flagged degenerate and gets coordinate 0.
    """
    j = _as_matrix(j)
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    col_norms = np.linalg.norm(j, axis=0)
    k = int(np.argmax(col_norms))
    eta = np.zeros(j.shape[1])
    eta[k] = eps
    gain = float(eps * col_norms[k])
    return RegressionAttackResult(
        eta=eta, output_gain=gain, opnorm_estimate=gain / eps, exact=True,
        degenerate=bool(col_norms[k] == 0.0))


def attack_linf_bruteforce(j, eps, max_dim=BRUTEFORCE_MAX_DIM):
    """Exact max-norm attack by enumerating all sign vertices of the box.

    The objective is convex, so the maximum over the linf ball is attained at
    one of the 2^cols vertices ``eps * s``, s in {-1, +1}^cols.  Enumeration
    is exact but exponential; inputs wider than ``max_dim`` are rejected
    because no polynomial exact method exists for this operator norm.
    """
    j = _as_matrix(j)
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    n = j.shape[1]
    if n > max_dim:
        raise ValueError(
            f"{n} columns exceed the enumeration cap {max_dim}: the max-norm "
            "gain is NP-hard in general, and 2^n vertices is the exact route")
    # vertex v: coordinate i is +1 when bit i of v is set, -1 otherwise
    idx = np.arange(2 ** n)
    signs = ((idx[:, None] >> np.arange(n)) & 1) * 2.0 - 1.0
    gains = np.linalg.norm(j @ signs.T, axis=0)
    best = int(np.argmax(gains))  # ties at the lowest vertex index
    eta = eps * signs[best]
    gain = float(eps * gains[best])
    return RegressionAttackResult(
        eta=eta, output_gain=gain, opnorm_estimate=gain / eps, exact=True,
        degenerate=bool(gains[best] == 0.0))


def network_regression_attack(net, x, p, eps, seed=0, max_dim=BRUTEFORCE_MAX_DIM):
    """First-order regression attack on a network at a fixed point.

    Evaluates the Jacobian once and maximizes the linearized output change;
    p must be 1, 2, or inf.  Returns the result plus the realized output
    change ``||f(x+eta) - f(x)||_2`` for comparison with the linear estimate.
    """
    x = np.asarray(x, dtype=float)
    trace = forward(net, x)
    j = jacobian(net, trace)
    p = float(p)
    if p == 2.0:
        result = attack_l2(j, eps, seed=seed)
    elif p == 1.0:
        result = attack_l1(j, eps)
    elif np.isinf(p):
        result = attack_linf_bruteforce(j, eps, max_dim=max_dim)
    else:
        raise ValueError(f"regression attacks support p in {{1, 2, inf}}, got {p}")
    realized = float(np.linalg.norm(
        forward(net, x + result.eta).output - trace.output))
    return result, realized
