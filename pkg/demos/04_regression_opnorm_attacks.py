"""Operator-norm attacks on a regression network.

The largest output change a small input perturbation can cause is the
operator norm of the Jacobian from the input norm to l2.  Three budgets have
exact maximizers: l2 (top singular direction), l1 (all budget on one
coordinate), and max-norm (exact sign-vertex enumeration, exponential and
therefore capped).  The max-norm ball contains the others, so its gain
dominates.
"""

import numpy as np

from pertfool import (forward, jacobian, network_regression_attack,
                      random_network)

net = random_network([8, 16, 16, 5], "tanh", seed=3)
rng = np.random.default_rng(4)
x = rng.normal(size=8) * 0.3
eps = 0.05

print(f"input dim 8 -> output dim 5, budget eps = {eps}\n")
results = {}
for p in (1.0, 2.0, np.inf):
    result, realized = network_regression_attack(net, x, p, eps)
    results[p] = result
    nonzero = int(np.count_nonzero(result.eta))
    print(f"p={p!s:<4} linear gain {result.output_gain:.5f}  "
          f"realized ||f(x+eta)-f(x)|| {realized:.5f}  "
          f"nonzero coords {nonzero}/8  exact={result.exact}")

print("\nball inclusion (l1 subset of l2 subset of linf) orders the gains:")
print(f"  {results[1.0].output_gain:.5f} <= {results[2.0].output_gain:.5f} "
      f"<= {results[np.inf].output_gain:.5f}")

j = jacobian(net, forward(net, x))
print(f"\nestimated operator norms of the Jacobian at x "
      f"(gain / eps): 1->2: {results[1.0].opnorm_estimate:.4f}, "
      f"2->2: {results[2.0].opnorm_estimate:.4f}, "
      f"inf->2: {results[np.inf].opnorm_estimate:.4f}")
print(f"spectral norm via SVD for reference: {np.linalg.svd(j)[1][0]:.4f}")
