"""Robustness quantification: fooling ratio, perturbation statistics, budgets.

Two summary numbers track how hard a classifier is to fool: the mean relative
size of minimal perturbations actually found by the iterative boundary search
(:func:`rho1`), and the mean linearized budget ``L / ||grad L||_q`` that the
dual-norm bound says any successful perturbation must spend (:func:`rho2`).
Both average over correctly classified samples only; misclassified inputs
have no fooling notion.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .attacks import (AttackSpec, DegenerateGradientError, attack_deepfool,
                      margin_loss, run_attack, spec_for_sample)
from .network import classify
from .numeric import dual_exponent, pnorm

__all__ = [
    "RobustnessReport",
    "MinEpsResult",
    "RhoStats",
    "correct_mask",
    "error_rate",
    "attack_all",
    "fooling_ratio",
    "rho1",
    "rho1_stats",
    "rho2",
    "rho2_stats",
    "min_eps_for_threshold",
]

MIN_EPS_RESOLUTION = 1e-3
MIN_EPS_CAP = 1.0


@dataclass(eq=False)
class RhoStats:
    """A robustness mean plus the exclusion bookkeeping behind it."""

    value: float
    per_sample: np.ndarray
    n_correct: int
    n_excluded_not_fooled: int = 0
    n_excluded_zero_norm: int = 0
    n_excluded_zero_grad: int = 0


@dataclass(eq=False)
class MinEpsResult:
    """Smallest budget reaching a fooling threshold, or None if unreachable."""

    eps: float | None
    best_ratio: float
    evaluations: int


@dataclass(eq=False)
class RobustnessReport:
    """Table of robustness measures plus the fooling curve behind them."""

    test_error: float
    rho1: float
    rho2: float
    min_eps_99: float | None
    min_eps_best_ratio: float
    eps_grid: list[float]
    fooling_curve: list[tuple[str, float, float]]  # (method, eps, ratio)
    exclusions: dict[str, int] = field(default_factory=dict)


def correct_mask(net, data):
    """Boolean mask of samples the network classifies correctly."""
    if len(data) == 0:
        raise ValueError("empty dataset")
    return np.array([classify(net, x) == y
                     for x, y in zip(data.samples, data.labels)])


def error_rate(net, data):
    """Fraction of misclassified samples."""
    return 1.0 - float(np.mean(correct_mask(net, data)))


def attack_all(net, data, spec, indices=None):
    """Attack the given sample indices (default: all), one outcome each.

    Every sample gets its own seed derived from the spec seed and the absolute
    sample index, so parallel and serial drivers agree.  A degenerate-gradient
    failure from the boundary search is recorded as a zero perturbation rather
    than aborting the batch.
    """
    if indices is None:
        indices = range(len(data))
    outcomes = []
    for i in indices:
        sample_spec = spec_for_sample(spec, int(i))
        try:
            outcomes.append(run_attack(net, data.samples[i], sample_spec,
                                       true_label=int(data.labels[i])))
        except DegenerateGradientError:
            outcomes.append(run_attack(
                net, data.samples[i],
                replace(sample_spec, method="alg1", eps=0.0)))
    return outcomes


def fooling_ratio(net, data, method, spec):
    """Fraction of correctly classified samples whose class flips under attack.

    Returns NaN when the network classifies nothing correctly.
    """
    mask = correct_mask(net, data)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return float("nan")
    outcomes = attack_all(net, data, replace(spec, method=method), idx)
    return float(np.mean([o.fooled for o in outcomes]))


def rho1_stats(net, data, p=np.inf, seed=0, proxy="softmax", overshoot=1.02):
    """Mean relative size of minimal perturbations found by boundary search.

    Runs the uncapped iterative search on every correctly classified sample;
    samples it fails to fool within the iteration cap are excluded (counted),
    as are zero-norm inputs where the relative size is undefined.
    """
    mask = correct_mask(net, data)
    idx = np.flatnonzero(mask)
    spec = AttackSpec(method="deepfool", p=p, eps=np.inf, seed=seed,
                      proxy=proxy, overshoot=overshoot)
    ratios = []
    n_not_fooled = 0
    n_zero = 0
    for i in idx:
        x = data.samples[i]
        xnorm = pnorm(x, p)
        if xnorm == 0.0:
            n_zero += 1
            continue
        try:
            outcome = attack_deepfool(net, x, spec_for_sample(spec, int(i)))
        except DegenerateGradientError:
            n_not_fooled += 1
            continue
        if not outcome.fooled:
            n_not_fooled += 1
            continue
        ratios.append(pnorm(outcome.eta, p) / xnorm)
    if not ratios:
        raise ValueError("no sample produced a minimal perturbation")
    per_sample = np.asarray(ratios)
    return RhoStats(value=float(per_sample.mean()), per_sample=per_sample,
                    n_correct=int(idx.size),
                    n_excluded_not_fooled=n_not_fooled,
                    n_excluded_zero_norm=n_zero)


def rho1(net, data, p=np.inf, **kwargs):
    return rho1_stats(net, data, p, **kwargs).value


def rho2_stats(net, data, p=np.inf, proxy="softmax"):
    """Mean linearized minimal budget ``L(x) / ||grad L(x)||_q``.

    This is the per-sample bound below which no perturbation can flip the
    linearized margin; zero-gradient samples are excluded and counted.
    """
    mask = correct_mask(net, data)
    idx = np.flatnonzero(mask)
    q = dual_exponent(p)
    values = []
    n_zero_grad = 0
    for i in idx:
        loss, grad, _ = margin_loss(net, data.samples[i], proxy=proxy)
        gnorm = pnorm(grad, q)
        if gnorm == 0.0:
            n_zero_grad += 1
            continue
        values.append(loss / gnorm)
    if not values:
        raise ValueError("no correctly classified sample with a usable gradient")
    per_sample = np.asarray(values)
    return RhoStats(value=float(per_sample.mean()), per_sample=per_sample,
                    n_correct=int(idx.size), n_excluded_zero_grad=n_zero_grad)


def rho2(net, data, p=np.inf, **kwargs):
    return rho2_stats(net, data, p, **kwargs).value


def min_eps_for_threshold(net, data, threshold=0.99, p=np.inf, seed=0,
                          proxy="softmax", resolution=MIN_EPS_RESOLUTION,
                          eps_cap=MIN_EPS_CAP):
    """Smallest budget at which the capped boundary search fools ``threshold``.

    Doubles an upper bound until the threshold is met (capped), then bisects
    down to the absolute resolution.  Returns the smallest evaluated budget
    meeting the threshold, or ``eps=None`` with the best ratio achieved when
    even the cap falls short.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")

    evals = 0

    def ratio_at(eps):
        nonlocal evals
        evals += 1
        spec = AttackSpec(method="deepfool", p=p, eps=eps, seed=seed, proxy=proxy)
        return fooling_ratio(net, data, "deepfool", spec)

    best_ratio = 0.0
    hi = resolution
    while True:
        r = ratio_at(hi)
        best_ratio = max(best_ratio, r)
        if r >= threshold:
            break
        if hi >= eps_cap:
            return MinEpsResult(eps=None, best_ratio=best_ratio, evaluations=evals)
        hi = min(2.0 * hi, eps_cap)
    lo = 0.0
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        r = ratio_at(mid)
        best_ratio = max(best_ratio, r)
        if r >= threshold:
            hi = mid
        else:
            lo = mid
    return MinEpsResult(eps=hi, best_ratio=best_ratio, evaluations=evals)
