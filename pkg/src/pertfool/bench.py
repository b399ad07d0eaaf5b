"""Benchmark drivers: fooling-ratio sweeps and robustness reports.

A sweep evaluates each configured method at each budget on the same samples
and seeds, so curves are comparable cell by cell.  Outputs embed the resolved
configuration; given the same config and seed they are byte-identical across
runs, serial or parallel (cells are independent and per-sample seeds are
derived from the absolute sample index).
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .attacks import METHODS, AttackSpec
from .metrics import (RobustnessReport, attack_all, correct_mask,
                      error_rate, min_eps_for_threshold, rho1_stats, rho2_stats)

__all__ = [
    "DEFAULT_EPS_GRID",
    "SweepRecord",
    "parse_method_token",
    "run_sweep",
    "sweep_csv",
    "run_report",
    "report_json",
]

# 20 logarithmically spaced budgets covering the interesting fooling range
DEFAULT_EPS_GRID = tuple(float(e) for e in np.logspace(np.log10(1e-3),
                                                       np.log10(0.5), 20))


@dataclass
class SweepRecord:
    """One (method, eps) cell of a sweep."""

    method: str
    eps: float
    fooling_ratio: float
    mean_iterations: float
    samples: int


def parse_method_token(token):
    """Split ``name`` or ``name:n`` into (name, iters-or-None)."""
    name, _, n = token.partition(":")
    if name not in METHODS:
        raise ValueError(f"unknown method {name!r}; choose from {METHODS}")
    if not n:
        return name, None
    iters = int(n)
    if iters < 1:
        raise ValueError(f"iteration count in {token!r} must be >= 1")
    return name, iters


def _eval_cell(args):
    net, data, indices, token, spec = args
    name, iters = parse_method_token(token)
    cell_spec = replace(spec, method=name,
                        iters=iters if iters is not None else spec.iters)
    outcomes = attack_all(net, data, cell_spec, indices)
    if not outcomes:
        return SweepRecord(token, spec.eps, float("nan"), float("nan"), 0)
    return SweepRecord(
        method=token,
        eps=spec.eps,
        fooling_ratio=float(np.mean([o.fooled for o in outcomes])),
        mean_iterations=float(np.mean([o.iterations_used for o in outcomes])),
        samples=len(outcomes),
    )


def run_sweep(net, data, methods, eps_grid, spec, jobs=1):
    """Fooling ratios for every (method, eps) cell, sorted by (method, eps).

    ``methods`` are tokens like ``alg1`` or ``alg1n:5``; the iteration suffix
    overrides ``spec.iters`` for that curve.  ``jobs > 1`` evaluates cells in
    a process pool with identical results.
    """
    indices = [int(i) for i in np.flatnonzero(correct_mask(net, data))]
    cells = [(net, data, indices, token, replace(spec, eps=float(eps)))
             for token in methods for eps in eps_grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_eval_cell, cells))
    else:
        records = [_eval_cell(cell) for cell in cells]
    return sorted(records, key=lambda r: (r.method, r.eps))


def _fmt(x):
    """Full round-trip precision (17 significant digits) for CSV cells."""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _config_line(config):
    return json.dumps(config, sort_keys=True, default=float)


def sweep_csv(records, config):
    """CSV artifact with the resolved configuration embedded as comments."""
    lines = [
        "# pertfool-sweep v1",
        f"# config: {_config_line(config)}",
        "method,eps,fooling_ratio,mean_iterations,samples",
    ]
    for r in records:
        lines.append(",".join([
            r.method, _fmt(r.eps), _fmt(r.fooling_ratio),
            _fmt(r.mean_iterations), str(r.samples),
        ]))
    return "\n".join(lines) + "\n"


def run_report(net, data, p=np.inf, seed=0, proxy="softmax",
               eps_grid=DEFAULT_EPS_GRID, curve_methods=("alg1", "deepfool", "random"),
               threshold=0.99, jobs=1):
    """Assemble the robustness report: test error, rho measures, budget search.

    The fooling curve is evaluated with the same machinery as a sweep so the
    report and a sweep over the same grid agree cell for cell.
    """
    spec = AttackSpec(method="alg1", p=p, seed=seed, proxy=proxy)
    r1 = rho1_stats(net, data, p=p, seed=seed, proxy=proxy)
    r2 = rho2_stats(net, data, p=p, proxy=proxy)
    min_eps = min_eps_for_threshold(net, data, threshold=threshold, p=p,
                                    seed=seed, proxy=proxy)
    records = run_sweep(net, data, curve_methods, eps_grid, spec, jobs=jobs)
    return RobustnessReport(
        test_error=error_rate(net, data),
        rho1=r1.value,
        rho2=r2.value,
        min_eps_99=min_eps.eps,
        min_eps_best_ratio=min_eps.best_ratio,
        eps_grid=[float(e) for e in eps_grid],
        fooling_curve=[(r.method, r.eps, r.fooling_ratio) for r in records],
        exclusions={
            "rho1_not_fooled": r1.n_excluded_not_fooled,
            "rho1_zero_norm": r1.n_excluded_zero_norm,
            "rho2_zero_grad": r2.n_excluded_zero_grad,
        },
    )


def report_json(report, config):
    """Versioned JSON artifact with config echo and library versions."""
    doc = {
        "report_version": 1,
        "config": config,
        "versions": {
            "pertfool": __version__,
            "numpy": np.__version__,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
        },
        "test_error": report.test_error,
        "rho1": report.rho1,
        "rho2": report.rho2,
        "min_eps_99": report.min_eps_99,
        "min_eps_best_ratio": report.min_eps_best_ratio,
        "eps_grid": report.eps_grid,
        "fooling_curve": [
            {"method": m, "eps": e, "fooling_ratio": r}
            for m, e, r in report.fooling_curve
        ],
        "exclusions": report.exclusions,
    }
    return json.dumps(doc, sort_keys=True, indent=2, default=float) + "\n"
