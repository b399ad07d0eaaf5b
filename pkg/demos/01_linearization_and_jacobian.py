"""How well does the layerwise Jacobian predict a network's local behavior?

Builds a small tanh classifier, compares the analytic Jacobian against
central finite differences, and then watches the first-order prediction
error shrink as the probe perturbation gets smaller.
"""

import numpy as np

from pertfool import finite_diff_jacobian, forward, jacobian, random_network

rng = np.random.default_rng(0)

net = random_network([6, 12, 8, 3], "tanh", seed=1)
x = rng.normal(size=6) * 0.4

trace = forward(net, x)
print("logits at x:", np.round(trace.output, 4))

analytic = jacobian(net, trace)
fd = finite_diff_jacobian(lambda v: forward(net, v).output, x)
print(f"\nJacobian shape {analytic.shape}, "
      f"max |analytic - finite diff| = {np.abs(analytic - fd).max():.2e}")

print("\nFirst-order prediction f(x+d) ~ f(x) + J d, error vs ||d||:")
direction = rng.normal(size=6)
direction /= np.linalg.norm(direction)
for scale in (1e-1, 1e-2, 1e-3, 1e-4):
    d = scale * direction
    predicted = trace.output + analytic @ d
    actual = forward(net, x + d).output
    err = np.linalg.norm(actual - predicted)
    print(f"  ||d|| = {scale:.0e}   ||f(x+d) - prediction|| = {err:.3e}"
          f"   (ratio to ||d||^2: {err / scale**2:.2f})")

print("\nThe error tracks ||d||^2: the linearization is first-order exact.")
