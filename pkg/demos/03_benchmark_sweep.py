"""Fooling-ratio benchmark: all seven attack methods across budgets.

Trains the 150/100 dense classifier on blobs and sweeps every method over a
log grid of max-norm budgets, printing the curve table that a ``pertfool
sweep`` run would write as CSV.  Iterated and boundary-seeking methods pull
ahead of one-shot methods, and every designed attack dominates random noise.
"""

import numpy as np

from pertfool import (AttackSpec, TrainConfig, error_rate, gen_blobs,
                      random_network, run_sweep, train_sgd)

data = gen_blobs(n_samples=1500, n_classes=4, dim=24, seed=606,
                 separation=0.55, noise=0.09)
train, test = data.split(1200)
net = random_network([24, 150, 100, 4], ["tanh", "tanh", "identity"], seed=606)
net = train_sgd(net, train, TrainConfig(seed=606, epochs=20))
print(f"test error {error_rate(net, test):.3f} on {len(test)} samples")

methods = ["alg1", "alg1n:5", "alg2", "fgsm", "deepfool", "pgd", "random"]
grid = [float(e) for e in np.logspace(-2.3, -0.3, 8)]
spec = AttackSpec(method="alg1", seed=2024)
records = run_sweep(net, test, methods, grid, spec)

curves = {}
for r in records:
    curves.setdefault(r.method, {})[r.eps] = r.fooling_ratio

header = "eps      " + "".join(f"{m:>10}" for m in methods)
print("\nfooling ratio by budget:")
print(header)
for eps in grid:
    row = f"{eps:<9.4f}" + "".join(f"{curves[m][eps]:>10.3f}" for m in methods)
    print(row)
