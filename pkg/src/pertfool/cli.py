"""Command-line surface: data generation, training, attacks, sweeps, reports.

Every file the CLI emits embeds the resolved configuration and seed.  Errors
exit nonzero with a single machine-parsable line on stderr:
``pertfool: error [CODE] message``.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .attacks import AttackSpec, run_attack
from .bench import (DEFAULT_EPS_GRID, parse_method_token, report_json,
                    run_report, run_sweep, sweep_csv)
from .data import (IdxFormatError, gen_blobs, gen_rings, load_dataset,
                   load_mnist, save_dataset)
from .metrics import error_rate
from .network import (ModelFormatError, TrainConfig, TrainingError, classify,
                      load_model, random_network, save_model, train_sgd)
from .numeric import ConvergenceError, pnorm
from .opnorm import network_regression_attack

PROG = "pertfool"


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _parse_p(text):
    if text in ("inf", "infinity", "oo"):
        return float("inf")
    try:
        p = float(text)
    except ValueError:
        raise CliError("CONFIG", f"cannot parse norm exponent {text!r}") from None
    if p < 1:
        raise CliError("CONFIG", f"norm exponent must be >= 1, got {p}")
    return p


def _parse_eps_grid(text):
    """Either ``lo:hi:N`` / ``lo:hi:Nlog`` or a comma list of budgets."""
    if text == "default":
        return list(DEFAULT_EPS_GRID)
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            log = n.endswith("log")
            count = int(n[:-3] if log else n)
            if count < 1 or float(lo) <= 0 or float(hi) < float(lo):
                raise ValueError
            if log:
                return [float(e) for e in
                        np.logspace(np.log10(float(lo)), np.log10(float(hi)), count)]
            return [float(e) for e in np.linspace(float(lo), float(hi), count)]
        return [float(tok) for tok in text.split(",")]
    except ValueError:
        raise CliError("CONFIG", f"cannot parse eps grid {text!r}; use "
                       "'lo:hi:N', 'lo:hi:Nlog', a comma list, or 'default'") from None


def _load_model_file(path):
    try:
        with open(path, "rb") as fh:
            return load_model(fh.read())
    except OSError as exc:
        raise CliError("IO", f"cannot read model {path}: {exc}") from None


def _load_data_file(path):
    try:
        return load_dataset(path)
    except OSError as exc:
        raise CliError("IO", f"cannot read dataset {path}: {exc}") from None


def _write(path, payload):
    mode = "wb" if isinstance(payload, bytes) else "w"
    kwargs = {} if mode == "wb" else {"newline": "\n"}
    try:
        with open(path, mode, **kwargs) as fh:
            fh.write(payload)
    except OSError as exc:
        raise CliError("IO", f"cannot write {path}: {exc}") from None


def _spec_from_args(args, method=None):
    return AttackSpec(
        method=method or args.method,
        p=_parse_p(args.p),
        eps=args.eps,
        iters=args.iters,
        seed=args.seed,
        clip01=args.clip01,
        proxy=args.proxy,
    )


def _add_attack_flags(sub, with_method=True, with_eps=True):
    if with_method:
        sub.add_argument("--method", required=True)
    if with_eps:
        sub.add_argument("--eps", type=float, required=True)
    sub.add_argument("--p", default="inf", help="norm exponent (number or 'inf')")
    sub.add_argument("--iters", type=int, default=None)
    sub.add_argument("--seed", type=int, required=True)
    sub.add_argument("--clip01", action="store_true")
    sub.add_argument("--proxy", choices=("softmax", "logits"), default="softmax")


def cmd_gen_data(args):
    if args.kind == "blobs":
        data = gen_blobs(n_samples=args.n, n_classes=args.classes, dim=args.dim,
                         seed=args.seed, separation=args.separation,
                         noise=args.noise)
    elif args.kind == "rings":
        data = gen_rings(n_samples=args.n, n_classes=args.classes,
                         seed=args.seed, spacing=args.spacing, noise=args.noise)
    else:
        if not (args.images and args.labels):
            raise CliError("CONFIG", "mnist-idx needs --images and --labels")
        data = load_mnist(args.images, args.labels)
    save_dataset(data, args.out)
    print(f"wrote {args.out}: {len(data)} samples, dim {data.dim}, "
          f"{data.n_classes} classes")
    return 0


def cmd_train(args):
    data = _load_data_file(args.data)
    hidden = [int(h) for h in args.hidden.split(",")] if args.hidden else []
    sizes = [data.dim] + hidden + [data.n_classes]
    acts = [args.act] * len(hidden) + ["identity"]
    net = random_network(sizes, acts, seed=args.seed)
    cfg = TrainConfig(seed=args.seed, lr=args.lr, batch_size=args.batch,
                      epochs=args.epochs)
    net = train_sgd(net, data, cfg)
    _write(args.out, save_model(net))
    err = error_rate(net, data)
    msg = f"wrote {args.out}: train error {err:.4f}"
    if args.test_data:
        msg += f", test error {error_rate(net, _load_data_file(args.test_data)):.4f}"
    print(msg)
    return 0


def cmd_attack(args):
    net = _load_model_file(args.model)
    data = _load_data_file(args.data)
    if not 0 <= args.index < len(data):
        raise CliError("CONFIG", f"--index {args.index} out of range "
                       f"[0, {len(data)})")
    spec = _spec_from_args(args)
    x = data.samples[args.index]
    outcome = run_attack(net, x, spec, true_label=int(data.labels[args.index]))
    doc = {
        "config": _echo(args),
        "clean_class": classify(net, x),
        "adv_class": classify(net, outcome.x_adv),
        "fooled": outcome.fooled,
        "degenerate": outcome.degenerate,
        "feasible_linearized": outcome.feasible_linearized,
        "loss_before": outcome.loss_before,
        "loss_after": outcome.loss_after,
        "iterations_used": outcome.iterations_used,
        "eta_norm_p": pnorm(outcome.eta, spec.p),
        "eta": outcome.eta.tolist(),
        "x_adv": outcome.x_adv.tolist(),
    }
    payload = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.out:
        _write(args.out, payload)
    print(f"method={spec.method} eps={spec.eps} fooled={outcome.fooled} "
          f"loss {outcome.loss_before:.6f} -> {outcome.loss_after:.6f}")
    return 0


def cmd_sweep(args):
    net = _load_model_file(args.model)
    data = _load_data_file(args.data)
    methods = args.methods.split(",")
    for token in methods:
        parse_method_token(token)
    grid = _parse_eps_grid(args.eps_grid)
    spec = _spec_from_args(args, method=parse_method_token(methods[0])[0])
    records = run_sweep(net, data, methods, grid, spec, jobs=args.jobs)
    payload = sweep_csv(records, _echo(args))
    _write(args.out, payload)
    print(f"wrote {args.out}: {len(records)} cells "
          f"({len(methods)} methods x {len(grid)} budgets)")
    return 0


def cmd_report(args):
    net = _load_model_file(args.model)
    data = _load_data_file(args.data)
    grid = _parse_eps_grid(args.eps_grid)
    methods = args.methods.split(",")
    for token in methods:
        parse_method_token(token)
    report = run_report(net, data, p=_parse_p(args.p), seed=args.seed,
                        proxy=args.proxy, eps_grid=grid, curve_methods=methods,
                        threshold=args.threshold, jobs=args.jobs)
    _write(args.out, report_json(report, _echo(args)))
    min_eps = "unreached" if report.min_eps_99 is None else f"{report.min_eps_99:.4f}"
    print(f"wrote {args.out}: test_error={report.test_error:.4f} "
          f"rho1={report.rho1:.4f} rho2={report.rho2:.4f} min_eps={min_eps}")
    return 0


def cmd_opnorm_attack(args):
    net = _load_model_file(args.model)
    data = _load_data_file(args.data)
    if not 0 <= args.index < len(data):
        raise CliError("CONFIG", f"--index {args.index} out of range "
                       f"[0, {len(data)})")
    p = _parse_p(args.p)
    result, realized = network_regression_attack(
        net, data.samples[args.index], p, args.eps, seed=args.seed)
    doc = {
        "config": _echo(args),
        "output_gain_linear": result.output_gain,
        "output_change_realized": realized,
        "opnorm_estimate": result.opnorm_estimate,
        "exact": result.exact,
        "degenerate": result.degenerate,
        "eta": result.eta.tolist(),
    }
    if args.out:
        _write(args.out, json.dumps(doc, sort_keys=True, indent=2) + "\n")
    print(f"p={args.p} eps={args.eps}: linear gain {result.output_gain:.6f}, "
          f"realized {realized:.6f}")
    return 0


def _echo(args):
    """Resolved configuration for reproducibility headers."""
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def build_parser():
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="adversarial perturbation toolkit for dense networks")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate or ingest a dataset (npz)")
    g.add_argument("--kind", choices=("blobs", "rings", "mnist-idx"),
                   required=True)
    g.add_argument("--n", type=int, default=400)
    g.add_argument("--classes", type=int, default=2)
    g.add_argument("--dim", type=int, default=8)
    g.add_argument("--separation", type=float, default=0.6)
    g.add_argument("--spacing", type=float, default=0.15)
    g.add_argument("--noise", type=float, default=0.08)
    g.add_argument("--images", help="IDX image file (mnist-idx)")
    g.add_argument("--labels", help="IDX label file (mnist-idx)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train a dense classifier")
    t.add_argument("--data", required=True)
    t.add_argument("--test-data")
    t.add_argument("--hidden", default="150,100",
                   help="comma-separated hidden sizes, empty for none")
    t.add_argument("--act", choices=("tanh", "sigmoid", "relu", "identity"),
                   default="tanh")
    t.add_argument("--lr", type=float, default=0.05)
    t.add_argument("--batch", type=int, default=32)
    t.add_argument("--epochs", type=int, default=20)
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--out", required=True, help="model JSON path")
    t.set_defaults(func=cmd_train)

    a = sub.add_parser("attack", help="attack one sample")
    a.add_argument("--model", required=True)
    a.add_argument("--data", required=True)
    a.add_argument("--index", type=int, default=0)
    _add_attack_flags(a)
    a.add_argument("--out", help="write the outcome as JSON")
    a.set_defaults(func=cmd_attack)

    s = sub.add_parser("sweep", help="fooling-ratio sweep over budgets (CSV)")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--methods", required=True,
                   help="comma list of method tokens, e.g. alg1,alg1n:5,random")
    s.add_argument("--eps-grid", default="default")
    _add_attack_flags(s, with_method=False, with_eps=False)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep, eps=0.0)

    r = sub.add_parser("report", help="robustness report (JSON)")
    r.add_argument("--model", required=True)
    r.add_argument("--data", required=True)
    r.add_argument("--p", default="inf")
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--proxy", choices=("softmax", "logits"), default="softmax")
    r.add_argument("--eps-grid", default="default")
    r.add_argument("--methods", default="alg1,deepfool,random")
    r.add_argument("--threshold", type=float, default=0.99)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)

    o = sub.add_parser("opnorm-attack",
                       help="operator-norm regression attack at one sample")
    o.add_argument("--model", required=True)
    o.add_argument("--data", required=True)
    o.add_argument("--index", type=int, default=0)
    o.add_argument("--p", default="2", help="1, 2, or inf")
    o.add_argument("--eps", type=float, required=True)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out", help="write the result as JSON")
    o.set_defaults(func=cmd_opnorm_attack)

    return parser


_ERROR_CODES = (
    (CliError, None),
    (ModelFormatError, "PARSE"),
    (IdxFormatError, "PARSE"),
    (TrainingError, "TRAINING"),
    (ConvergenceError, "CONVERGENCE"),
    (OSError, "IO"),
    (ValueError, "CONFIG"),
)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except tuple(exc for exc, _ in _ERROR_CODES) as exc:
        code = exc.code if isinstance(exc, CliError) else next(
            c for t, c in _ERROR_CODES if isinstance(exc, t))
        print(f"{PROG}: error [{code}] {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
