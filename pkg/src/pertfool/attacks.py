"""Classification attacks built on local linearization.

Every method here perturbs an input within an lp budget and reports a uniform
:class:`AttackOutcome`.  The closed-form core (:func:`gn_closed_form`) places
the whole budget along the dual-norm maximizer of the loss gradient; the
iterative methods re-linearize and repeat.  Class scores come from a proxy:
softmax probabilities by default, or raw logits (useful when softmax saturates
and its gradients underflow).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .network import classify, forward, jacobian, softmax_proxy, vjp, cross_entropy_grad
from .numeric import dual_exponent, dual_maximizer, pnorm

__all__ = [
    "METHODS",
    "PROXIES",
    "AttackSpec",
    "AttackOutcome",
    "DegenerateGradientError",
    "margin_loss",
    "targeted_margin",
    "feasibility_check",
    "gn_closed_form",
    "min_norm_step",
    "attack_alg1",
    "attack_alg1_n",
    "attack_alg2",
    "attack_fgsm",
    "attack_deepfool",
    "attack_pgd",
    "attack_random",
    "run_attack",
    "spec_for_sample",
]

METHODS = ("alg1", "alg1n", "alg2", "fgsm", "deepfool", "pgd", "random")
PROXIES = ("softmax", "logits")

DEEPFOOL_MAX_ITERS = 50
DEFAULT_OVERSHOOT = 1.02


class DegenerateGradientError(ValueError):
    """All candidate linearizations have a zero gradient."""


@dataclass
class AttackSpec:
    """Method selection plus budget, seed, and evaluation options.

    ``iters`` is the step count n for alg1n/pgd and the iteration cap for
    deepfool (always clamped to 50); None picks the per-method default
    (alg1n: 1, pgd: 10, deepfool: 50).  ``eps`` may be ``inf`` for deepfool,
    which then searches for a minimal perturbation without a cap.  pgd and
    random define their budget in the max norm and require p = inf.
    """

    method: str
    p: float = np.inf
    eps: float = 0.1
    iters: int | None = None
    seed: int = 0
    clip01: bool = False
    proxy: str = "softmax"
    overshoot: float = DEFAULT_OVERSHOOT

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not float(self.p) >= 1.0:
            raise ValueError(f"norm exponent must satisfy p >= 1, got {self.p}")
        if not self.eps >= 0.0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if self.iters is not None and self.iters < 1:
            raise ValueError("iters must be >= 1 when given")
        if np.isinf(self.eps) and self.method != "deepfool":
            raise ValueError("only deepfool accepts an unbounded budget (eps=inf)")
        if self.proxy not in PROXIES:
            raise ValueError(f"proxy must be one of {PROXIES}, got {self.proxy!r}")
        if self.overshoot < 1.0:
            raise ValueError("overshoot must be >= 1")
        if self.method in ("pgd", "random") and not np.isinf(self.p):
            raise ValueError(f"{self.method} is a max-norm method; use p=inf")


@dataclass(eq=False)
class AttackOutcome:
    """Perturbation and bookkeeping for one attacked sample.

    ``loss_before``/``loss_after`` are the full margin loss at the clean and
    adversarial point relative to the clean class, so ``loss_after < 0``
    coincides with ``fooled``.  ``feasible_linearized`` is the dual-norm
    feasibility verdict for changing the class within ``eps``, computed from
    the method's own linearization: the full margin for most methods, the
    top-score surrogate for alg2 (which never sees other gradients), and the
    ratio-selected class pair for deepfool.  ``degenerate`` marks
    zero-gradient inputs where the method had nothing to follow.
    """

    eta: np.ndarray
    x_adv: np.ndarray
    fooled: bool
    loss_before: float
    loss_after: float
    iterations_used: int
    feasible_linearized: bool
    degenerate: bool = False


def _resolve_iters(spec):
    if spec.iters is not None:
        return spec.iters
    if spec.method == "deepfool":
        return DEEPFOOL_MAX_ITERS
    if spec.method == "pgd":
        return 10
    return 1


def _proxy_values(trace, proxy):
    logits = trace.output
    return softmax_proxy(logits) if proxy == "softmax" else logits.copy()


def _cotangent(f, proxy, k, l=None):
    """Output cotangent whose vjp is grad of f_k (or f_k - f_l) w.r.t. x."""
    if proxy == "logits":
        v = np.zeros_like(f)
        v[k] = 1.0
        if l is not None:
            v[l] -= 1.0
        return v
    # softmax: d s_i / d z = s_i (e_i - s)
    v = -f[k] * f
    v[k] += f[k]
    if l is not None:
        v += f[l] * f
        v[l] -= f[l]
    return v


def _proxy_grad_matrix(net, trace, f, proxy):
    """Gradients of all proxy components, stacked as rows."""
    jac = jacobian(net, trace)
    if proxy == "logits":
        return jac
    return (np.diag(f) - np.outer(f, f)) @ jac


def _margin_from_values(f, k):
    """Smallest score gap against the competing classes; ties at lowest index."""
    gaps = f[k] - f
    gaps[k] = np.inf
    l_star = int(np.argmin(gaps))
    return float(gaps[l_star]), l_star


def _margin_state(net, x, proxy, k=None):
    """Margin loss, its gradient, and the reference class at a point."""
    if net.output_dim < 2:
        raise ValueError("margin loss needs at least two classes")
    trace = forward(net, x)
    f = _proxy_values(trace, proxy)
    if k is None:
        k = int(np.argmax(f))
    loss, l_star = _margin_from_values(f, k)
    grad = vjp(net, trace, _cotangent(f, proxy, k, l_star))
    return loss, grad, k


def margin_loss(net, x, proxy="softmax", k=None):
    """Margin loss of the predicted class and its input gradient.

    Returns ``(L, grad, k)`` where ``k`` is the predicted class,
    ``L = min over l != k of f_k(x) - f_l(x)`` and ``grad`` is the gradient of
    the realized gap (minimizing class, ties at the lowest index).  Passing a
    frozen ``k`` evaluates the margin relative to that class instead; the
    result is negative exactly when the point is classified away from ``k``.
    """
    return _margin_state(net, x, proxy, k)


def targeted_margin(net, x, t, proxy="softmax"):
    """Score gap ``f_k(x) - f_t(x)`` toward a chosen target class, with gradient.

    Feeding the result to :func:`gn_closed_form` or :func:`min_norm_step`
    yields attacks that push the input toward class ``t``.
    """
    t = int(t)
    if not 0 <= t < net.output_dim:
        raise ValueError(f"target {t} out of range for {net.output_dim} classes")
    trace = forward(net, x)
    f = _proxy_values(trace, proxy)
    k = int(np.argmax(f))
    if t == k:
        raise ValueError(f"target class {t} is already the predicted class")
    grad = vjp(net, trace, _cotangent(f, proxy, k, t))
    return float(f[k] - f[t]), grad


def feasibility_check(loss, grad, p, eps):
    """Dual-norm feasibility of the linearized class-change constraint.

    Returns False (infeasible) exactly when ``eps * ||grad||_q < loss``: no
    perturbation within the lp budget can push the linearized margin to zero.
    """
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    gnorm = pnorm(grad, dual_exponent(p))
    if gnorm == 0.0:
        reach = 0.0
    elif np.isinf(eps):
        reach = np.inf
    else:
        reach = eps * gnorm
    return not reach < loss


def gn_closed_form(grad, p, eps):
    """Budget-saturating minimizer of ``eta . grad`` over the lp ball.

    Componentwise ``-eps * sign(g_i) |g_i|^(q-1) / ||g||_q^(q-1)``; for p=inf
    this is ``-eps * sign(grad)`` and for p=1 the whole budget lands on the
    largest-magnitude coordinate (ties at the lowest index).  Always satisfies
    ``||eta||_p <= eps`` and ``eta . grad = -eps * ||grad||_q``.
    """
    grad = np.asarray(grad, dtype=float)
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    if eps == 0.0 or not grad.any():
        return np.zeros_like(grad)
    v, _ = dual_maximizer(grad, p, eps)
    return -v


def min_norm_step(loss, grad, p):
    """Smallest-lp perturbation that zeroes the linearized margin.

    Scales the :func:`gn_closed_form` direction to norm ``loss / ||grad||_q``,
    making the constraint ``loss + eta . grad <= 0`` active.
    """
    grad = np.asarray(grad, dtype=float)
    if loss < 0:
        raise ValueError(f"margin loss must be >= 0, got {loss}")
    if not grad.any():
        raise ValueError("unsatisfiable: zero gradient cannot reduce a positive margin")
    return gn_closed_form(grad, p, loss / pnorm(grad, dual_exponent(p)))


def _project_ball(eta, p, eps):
    """Radial projection onto the lp ball: rescale, keeping the direction."""
    if np.isinf(eps):
        return eta
    norm = pnorm(eta, p)
    if norm > eps:
        return eta * (eps / norm)
    return eta


def _finish(net, x, spec, eta, k, loss_before, feasible, iters_used,
            degenerate=False):
    x_adv = x + eta
    if spec.clip01:
        x_adv = np.clip(x_adv, 0.0, 1.0)
    trace = forward(net, x_adv)
    f = _proxy_values(trace, spec.proxy)
    loss_after, _ = _margin_from_values(f, k)
    fooled = classify(net, x_adv) != k
    return AttackOutcome(
        eta=eta,
        x_adv=x_adv,
        fooled=fooled,
        loss_before=loss_before,
        loss_after=loss_after,
        iterations_used=iters_used,
        feasible_linearized=feasible,
        degenerate=degenerate,
    )


def attack_alg1(net, x, spec):
    """One closed-form step on the full margin loss."""
    x = np.asarray(x, dtype=float)
    loss, grad, k = _margin_state(net, x, spec.proxy)
    feasible = feasibility_check(loss, grad, spec.p, spec.eps)
    if not grad.any():
        return _finish(net, x, spec, np.zeros_like(x), k, loss, feasible, 1,
                       degenerate=True)
    eta = gn_closed_form(grad, spec.p, spec.eps)
    return _finish(net, x, spec, eta, k, loss, feasible, 1)


def attack_alg1_n(net, x, spec, k=None):
    """Iterated closed-form steps, each spending ``eps / n`` of the budget.

    The margin and gradient are recomputed at the current point every
    iteration (relative to the clean class ``k``), so the total perturbation
    stays within ``eps`` by the triangle inequality.  Stops early once the
    running point is fooled.
    """
    x = np.asarray(x, dtype=float)
    n = _resolve_iters(spec)
    loss0, grad0, k = _margin_state(net, x, spec.proxy, k)
    feasible = feasibility_check(loss0, grad0, spec.p, spec.eps)
    step_eps = spec.eps / n
    eta = np.zeros_like(x)
    iters_used = 0
    degenerate = False
    for i in range(n):
        if i == 0:
            loss, grad = loss0, grad0
        else:
            loss, grad, _ = _margin_state(net, x + eta, spec.proxy, k)
        if loss < 0:  # running point already fooled
            break
        if not grad.any():
            degenerate = iters_used == 0
            break
        eta = eta + gn_closed_form(grad, spec.p, step_eps)
        iters_used += 1
    return _finish(net, x, spec, eta, k, loss0, feasible, iters_used,
                   degenerate=degenerate)


def attack_alg2(net, x, spec):
    """One closed-form step that only descends the top class score.

    Skips the search over competing classes, so exactly one gradient vector is
    evaluated however many classes there are; fooling is decided by
    re-classification since the surrogate cannot certify it.
    """
    x = np.asarray(x, dtype=float)
    if net.output_dim < 2:
        raise ValueError("margin loss needs at least two classes")
    trace = forward(net, x)
    f = _proxy_values(trace, spec.proxy)
    k = int(np.argmax(f))
    loss_before, _ = _margin_from_values(f, k)
    grad = vjp(net, trace, _cotangent(f, spec.proxy, k))
    feasible = feasibility_check(float(f[k]), grad, spec.p, spec.eps)
    if not grad.any():
        return _finish(net, x, spec, np.zeros_like(x), k, loss_before,
                       feasible, 1, degenerate=True)
    eta = gn_closed_form(grad, spec.p, spec.eps)
    return _finish(net, x, spec, eta, k, loss_before, feasible, 1)


def attack_fgsm(net, x, true_label, spec):
    """Budget-saturating ascent step on the training loss.

    For p=inf this is the classic ``eta = eps * sign(grad CE)``; other p place
    the budget along the corresponding dual-norm maximizer.
    """
    x = np.asarray(x, dtype=float)
    _, g = cross_entropy_grad(net, x, true_label)
    loss_before, mgrad, k = _margin_state(net, x, spec.proxy)
    feasible = feasibility_check(loss_before, mgrad, spec.p, spec.eps)
    if not g.any():
        return _finish(net, x, spec, np.zeros_like(x), k, loss_before,
                       feasible, 1, degenerate=True)
    eta = gn_closed_form(-g, spec.p, spec.eps)
    return _finish(net, x, spec, eta, k, loss_before, feasible, 1)


def attack_deepfool(net, x, spec, k=None):
    """Iterative minimal-perturbation search against the easiest class.

    Each iteration linearizes all score gaps at the current point, steps just
    past the nearest boundary (smallest ``|f_k - f_l| / ||grad gap||_q``), and
    tests the overshot accumulated perturbation for a class change.  With a
    finite ``eps`` the accumulated perturbation is projected onto the budget
    ball every iteration; ``eps = inf`` searches unconstrained, which is how
    minimal perturbations for robustness measures are produced.
    """
    x = np.asarray(x, dtype=float)
    if net.output_dim < 2:
        raise ValueError("margin loss needs at least two classes")
    max_iter = min(_resolve_iters(spec), DEEPFOOL_MAX_ITERS)
    q = dual_exponent(spec.p)
    if k is None:
        k = classify(net, x)
    eta_acc = np.zeros_like(x)
    eta_out = np.zeros_like(x)
    loss_before = None
    feasible = None
    iters_used = 0
    for _ in range(max_iter):
        trace = forward(net, x + eta_acc)
        f = _proxy_values(trace, spec.proxy)
        if loss_before is None:
            loss_before, _ = _margin_from_values(f, k)
        if int(np.argmax(f)) != k:
            break  # crossed the boundary without overshoot
        grads = _proxy_grad_matrix(net, trace, f, spec.proxy)
        best_ratio, best_l = np.inf, -1
        for l in range(net.output_dim):
            if l == k:
                continue
            den = pnorm(grads[k] - grads[l], q)
            if den == 0.0:
                continue
            ratio = abs(f[k] - f[l]) / den
            if ratio < best_ratio:
                best_ratio, best_l = ratio, l
        if best_l < 0:
            raise DegenerateGradientError(
                "every score-gap gradient is zero; no boundary direction exists")
        if feasible is None:
            feasible = feasibility_check(
                float(f[k] - f[best_l]), grads[k] - grads[best_l], spec.p, spec.eps)
        step = min_norm_step(float(f[k] - f[best_l]), grads[k] - grads[best_l],
                             spec.p)
        eta_acc = _project_ball(eta_acc + step, spec.p, spec.eps)
        eta_out = _project_ball(spec.overshoot * eta_acc, spec.p, spec.eps)
        iters_used += 1
        probe = x + eta_out
        if spec.clip01:
            probe = np.clip(probe, 0.0, 1.0)
        if classify(net, probe) != k:
            break
    if feasible is None:  # zero-iteration path: point already off-class
        feasible = True
    return _finish(net, x, spec, eta_out, k, loss_before, feasible, iters_used)


def attack_pgd(net, x, true_label, spec, random_start=True):
    """Projected sign-gradient ascent on the training loss (max-norm budget).

    Starts from a seeded uniform point in the eps box (or from zero when
    ``random_start`` is off, which with n=1 reduces to the plain sign step)
    and takes n steps of size ``eps / n``, clamping back into the box after
    each one.
    """
    x = np.asarray(x, dtype=float)
    n = _resolve_iters(spec)
    loss_before, mgrad, k = _margin_state(net, x, spec.proxy)
    feasible = feasibility_check(loss_before, mgrad, spec.p, spec.eps)
    rng = np.random.default_rng(spec.seed)
    if random_start:
        eta = rng.uniform(-spec.eps, spec.eps, x.shape[0])
    else:
        eta = np.zeros_like(x)
    alpha = spec.eps / n
    for _ in range(n):
        point = x + eta
        if spec.clip01:
            point = np.clip(point, 0.0, 1.0)
        _, g = cross_entropy_grad(net, point, true_label)
        eta = np.clip(eta + alpha * np.sign(g), -spec.eps, spec.eps)
    return _finish(net, x, spec, eta, k, loss_before, feasible, n)


def attack_random(net, x, spec):
    """Coin-flip noise: every component is +eps or -eps with equal probability."""
    x = np.asarray(x, dtype=float)
    loss_before, mgrad, k = _margin_state(net, x, spec.proxy)
    feasible = feasibility_check(loss_before, mgrad, spec.p, spec.eps)
    rng = np.random.default_rng(spec.seed)
    signs = rng.integers(0, 2, x.shape[0]) * 2 - 1
    eta = spec.eps * signs.astype(float)
    return _finish(net, x, spec, eta, k, loss_before, feasible, 1)


def run_attack(net, x, spec, true_label=None):
    """Dispatch one attack per ``spec.method``; fgsm and pgd need the label."""
    if spec.method == "alg1":
        return attack_alg1(net, x, spec)
    if spec.method == "alg1n":
        return attack_alg1_n(net, x, spec)
    if spec.method == "alg2":
        return attack_alg2(net, x, spec)
    if spec.method == "deepfool":
        return attack_deepfool(net, x, spec)
    if spec.method == "random":
        return attack_random(net, x, spec)
    if true_label is None:
        raise ValueError(f"{spec.method} needs the true label")
    if spec.method == "fgsm":
        return attack_fgsm(net, x, true_label, spec)
    return attack_pgd(net, x, true_label, spec)


def spec_for_sample(spec, sample_index):
    """Per-sample spec with a derived seed (seed xor index).

    Keeps parallel and serial batch runs on identical random streams.
    """
    return replace(spec, seed=spec.seed ^ sample_index)
