"""Fully connected feedforward networks on numpy.

A network is an ordered stack of affine layers with pointwise activations.
The classifier under attack keeps its logits as the last layer's activations;
probabilities come from :func:`softmax_proxy` on top.  The analytic Jacobian
is the layerwise product of activation-derivative diagonals and weight
matrices, which for an input perturbation ``d`` predicts the output change
``f(x + d) - f(x)`` to first order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ACTIVATIONS",
    "Layer",
    "Network",
    "ForwardTrace",
    "TrainConfig",
    "forward",
    "jacobian",
    "vjp",
    "softmax_proxy",
    "classify",
    "cross_entropy_grad",
    "random_network",
    "train_sgd",
    "save_model",
    "load_model",
    "ModelFormatError",
    "TrainingError",
]

MODEL_FORMAT = "pertfool-model"
MODEL_VERSION = 1


class ModelFormatError(ValueError):
    """Model document violates the serialization schema."""


class TrainingError(RuntimeError):
    """Training diverged (non-finite loss)."""


def _sigmoid(z):
    # Split by sign so exp never sees a large positive argument.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _sigmoid_prime(z):
    s = _sigmoid(z)
    return s * (1.0 - s)


# name -> (phi, phi'); relu's subderivative at 0 is taken as 0 so the
# activation-derivative diagonals stay in [0, 1].
ACTIVATIONS = {
    "identity": (lambda z: z, lambda z: np.ones_like(z)),
    "tanh": (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
    "sigmoid": (_sigmoid, _sigmoid_prime),
    "relu": (lambda z: np.maximum(z, 0.0), lambda z: (z > 0).astype(float)),
}


def _act_fns(name):
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ModelFormatError(
            f"unknown activation {name!r}; allowed: {sorted(ACTIVATIONS)}"
        ) from None


@dataclass(eq=False)
class Layer:
    """Affine map plus pointwise activation: ``phi(w @ x + b)``."""

    w: np.ndarray
    b: np.ndarray
    act: str = "identity"

    def __post_init__(self):
        self.w = np.array(self.w, dtype=float, order="C")
        self.b = np.array(self.b, dtype=float, order="C")
        if self.w.ndim != 2 or self.b.ndim != 1:
            raise ValueError("layer weights must be a matrix and bias a vector")
        if self.w.shape[0] != self.b.shape[0]:
            raise ValueError(
                f"bias length {self.b.shape[0]} != weight rows {self.w.shape[0]}")
        if not (np.isfinite(self.w).all() and np.isfinite(self.b).all()):
            raise ValueError("layer parameters must be finite")
        _act_fns(self.act)
        # layers are shared read-only across attack workers
        self.w.setflags(write=False)
        self.b.setflags(write=False)

    @property
    def in_dim(self):
        return self.w.shape[1]

    @property
    def out_dim(self):
        return self.w.shape[0]

    def __eq__(self, other):
        return (isinstance(other, Layer)
                and self.act == other.act
                and np.array_equal(self.w, other.w)
                and np.array_equal(self.b, other.b))


@dataclass(eq=False)
class Network:
    """Stack of layers with chained dimensions."""

    layers: list[Layer]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("a network needs at least one layer")
        for prev, cur in zip(self.layers, self.layers[1:]):
            if cur.in_dim != prev.out_dim:
                raise ValueError(
                    f"layer input dim {cur.in_dim} does not chain with "
                    f"previous output dim {prev.out_dim}")

    @property
    def input_dim(self):
        return self.layers[0].in_dim

    @property
    def output_dim(self):
        return self.layers[-1].out_dim

    def __eq__(self, other):
        return isinstance(other, Network) and self.layers == other.layers


@dataclass(eq=False)
class ForwardTrace:
    """Per-layer pre-activations and activations from one forward pass."""

    input: np.ndarray
    preacts: list[np.ndarray] = field(default_factory=list)
    activations: list[np.ndarray] = field(default_factory=list)

    @property
    def output(self):
        return self.activations[-1]


def _check_input(net, x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != net.input_dim:
        raise ValueError(
            f"input of shape {x.shape} does not match network input dim "
            f"{net.input_dim}")
    if not np.isfinite(x).all():
        raise ValueError("input must be finite")
    return x


def forward(net, x):
    """Evaluate the layer recursion, recording every z and phi(z)."""
    x = _check_input(net, x)
    trace = ForwardTrace(input=x)
    a = x
    for layer in net.layers:
        z = layer.w @ a + layer.b
        phi, _ = _act_fns(layer.act)
        a = phi(z)
        trace.preacts.append(z)
        trace.activations.append(a)
    return trace


def jacobian(net, trace):
    """Analytic network Jacobian at the trace point.

    Accumulates ``Diag(phi'(z_l)) @ W_l`` over the layers, giving the
    (output_dim x input_dim) matrix that maps input perturbations to
    first-order output perturbations.
    """
    if len(trace.preacts) != len(net.layers):
        raise ValueError("trace does not match the network's layer count")
    z = None
    for layer, pre in zip(net.layers, trace.preacts):
        if pre.shape[0] != layer.out_dim:
            raise ValueError("trace dimensions do not match the network")
        _, dphi = _act_fns(layer.act)
        dw = dphi(pre)[:, None] * layer.w
        z = dw if z is None else dw @ z
    return z


def vjp(net, trace, v):
    """Vector-Jacobian product ``v @ J_f`` without forming the full Jacobian.

    One backward sweep, so the cost does not grow with the output dimension.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (net.output_dim,):
        raise ValueError(f"cotangent shape {v.shape} != ({net.output_dim},)")
    u = v
    for layer, pre in zip(reversed(net.layers), reversed(trace.preacts)):
        _, dphi = _act_fns(layer.act)
        u = (u * dphi(pre)) @ layer.w
    return u


def softmax_proxy(logits):
    """Probability vector over classes; max-subtraction keeps exp in range."""
    z = np.asarray(logits, dtype=float)
    if z.size == 0:
        raise ValueError("softmax of an empty vector is undefined")
    e = np.exp(z - z.max())
    return e / e.sum()


def classify(net, x):
    """Predicted 0-based label: argmax of the class probabilities.

    Ties break to the lowest index.
    """
    return int(np.argmax(softmax_proxy(forward(net, x).output)))


def cross_entropy_grad(net, x, label):
    """Cross-entropy of the softmax output and its gradient w.r.t. the input.

    Returns ``(loss, grad_x)`` where ``grad_x = J_f(x)^T (softmax - onehot)``.
    """
    label = int(label)
    if not 0 <= label < net.output_dim:
        raise ValueError(f"label {label} out of range for {net.output_dim} classes")
    trace = forward(net, x)
    z = trace.output
    zs = z - z.max()
    loss = float(np.log(np.exp(zs).sum()) - zs[label])
    s = softmax_proxy(z)
    s[label] -= 1.0
    return loss, vjp(net, trace, s)


def random_network(sizes, acts, seed):
    """Network with uniform weights in [-s, s], s = sqrt(6/(fan_in+fan_out)).

    ``sizes`` lists the dimensions ``[m_0, m_1, ..., m_L]``; ``acts`` is one
    activation name for all layers or a name per layer.  Biases start at zero.
    """
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output size")
    if isinstance(acts, str):
        acts = [acts] * (len(sizes) - 1)
    if len(acts) != len(sizes) - 1:
        raise ValueError(f"expected {len(sizes) - 1} activations, got {len(acts)}")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out, act in zip(sizes, sizes[1:], acts):
        s = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-s, s, size=(fan_out, fan_in))
        layers.append(Layer(w=w, b=np.zeros(fan_out), act=act))
    return Network(layers)


@dataclass
class TrainConfig:
    seed: int
    lr: float = 0.05
    batch_size: int = 32
    epochs: int = 20

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("invalid training configuration")


def _batch_forward(weights, biases, acts, x):
    """Forward pass on a (batch, dim) matrix; returns preacts and activations."""
    zs, activ = [], [x]
    for w, b, act in zip(weights, biases, acts):
        z = activ[-1] @ w.T + b
        zs.append(z)
        activ.append(_act_fns(act)[0](z))
    return zs, activ


def train_sgd(net, data, cfg):
    """Minibatch SGD on softmax cross-entropy; deterministic given cfg.seed.

    Returns a new network; the input network is left untouched.  Raises
    :class:`TrainingError` if the loss goes non-finite.
    """
    if len(data.samples) == 0:
        raise ValueError("cannot train on an empty dataset")
    labels = np.asarray(data.labels, dtype=int)
    if labels.min() < 0 or labels.max() >= net.output_dim:
        raise ValueError("dataset labels out of range for the network output")
    x_all = np.asarray(data.samples, dtype=float)

    weights = [layer.w.copy() for layer in net.layers]
    biases = [layer.b.copy() for layer in net.layers]
    acts = [layer.act for layer in net.layers]

    rng = np.random.default_rng(cfg.seed)
    n = x_all.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, yb = x_all[idx], labels[idx]
            zs, activ = _batch_forward(weights, biases, acts, xb)

            logits = activ[-1]
            shifted = logits - logits.max(axis=1, keepdims=True)
            ez = np.exp(shifted)
            probs = ez / ez.sum(axis=1, keepdims=True)
            loss = float(np.mean(
                np.log(ez.sum(axis=1)) - shifted[np.arange(len(yb)), yb]))
            if not np.isfinite(loss):
                raise TrainingError(f"training diverged (loss={loss})")

            delta = probs
            delta[np.arange(len(yb)), yb] -= 1.0
            delta /= len(yb)
            for li in range(len(weights) - 1, -1, -1):
                delta = delta * _act_fns(acts[li])[1](zs[li])
                gw = delta.T @ activ[li]
                gb = delta.sum(axis=0)
                if li > 0:
                    delta = delta @ weights[li]
                weights[li] = weights[li] - cfg.lr * gw
                biases[li] = biases[li] - cfg.lr * gb

    return Network([Layer(w=w, b=b, act=a)
                    for w, b, a in zip(weights, biases, acts)])


def save_model(net):
    """Serialize to the versioned JSON model document (UTF-8 bytes)."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "layers": [
            {
                "rows": layer.out_dim,
                "cols": layer.in_dim,
                "act": layer.act,
                "w": layer.w.ravel().tolist(),
                "b": layer.b.tolist(),
            }
            for layer in net.layers
        ],
    }
    return json.dumps(doc).encode("utf-8")


def _require(doc, key, where, kind=None):
    if key not in doc:
        raise ModelFormatError(f"missing field {key!r} at {where}")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise ModelFormatError(f"field {key!r} at {where} has wrong type")
    return value


def load_model(blob):
    """Parse a model document; errors name the offending field and position."""
    if isinstance(blob, bytes):
        blob = blob.decode("utf-8", errors="replace")
    try:
        doc = json.loads(blob)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(
            f"not valid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    fmt = _require(doc, "format", "document root", str)
    if fmt != MODEL_FORMAT:
        raise ModelFormatError(f"field 'format' must be {MODEL_FORMAT!r}, got {fmt!r}")
    version = _require(doc, "version", "document root", int)
    if version != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {version}")
    layer_docs = _require(doc, "layers", "document root", list)
    if not layer_docs:
        raise ModelFormatError("field 'layers' must be a non-empty list")
    layers = []
    for i, ld in enumerate(layer_docs):
        where = f"layers[{i}]"
        if not isinstance(ld, dict):
            raise ModelFormatError(f"{where} must be an object")
        rows = _require(ld, "rows", where, int)
        cols = _require(ld, "cols", where, int)
        act = _require(ld, "act", where, str)
        w = _require(ld, "w", where, list)
        b = _require(ld, "b", where, list)
        if rows < 1 or cols < 1:
            raise ModelFormatError(f"{where} has non-positive dimensions")
        if len(w) != rows * cols:
            raise ModelFormatError(
                f"{where}.w has {len(w)} entries, expected rows*cols = {rows * cols}")
        if len(b) != rows:
            raise ModelFormatError(
                f"{where}.b has {len(b)} entries, expected rows = {rows}")
        if act not in ACTIVATIONS:
            raise ModelFormatError(
                f"{where}.act is {act!r}; allowed: {sorted(ACTIVATIONS)}")
        try:
            layers.append(Layer(
                w=np.asarray(w, dtype=float).reshape(rows, cols),
                b=np.asarray(b, dtype=float),
                act=act,
            ))
        except (TypeError, ValueError) as exc:
            raise ModelFormatError(f"bad numeric data at {where}: {exc}") from None
    try:
        return Network(layers)
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None
