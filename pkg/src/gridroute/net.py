"""Hand-rolled fully-connected Q-network: forward, backprop, Adam, checkpoints.

The default architecture is 13 -> 512 -> 512 -> 12 with rectifier hidden
layers and a linear output. Everything runs in float64; the relu subgradient
at exactly 0 is taken as 0 so results are bit-reproducible.
"""

import base64
import json
from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolation, NumericalAbort
from .problems import rng_from_seed

DEFAULT_LAYER_SIZES = (13, 512, 512, 12)
CHECKPOINT_VERSION = 1

# Parameter names in checkpoint order: W1, b1, W2, b2, ...
def _param_names(num_layers):
    names = []
    for i in range(1, num_layers + 1):
        names.extend((f"W{i}", f"b{i}"))
    return names


@dataclass
class QNetwork:
    """Layer weights (out x in matrices) and biases. Mutated only by adam_step."""

    weights: list
    biases: list

    @property
    def layer_sizes(self):
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    def parameters(self):
        """Flat parameter list in checkpoint order (W1, b1, W2, b2, ...)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out


def init_network(layer_sizes=DEFAULT_LAYER_SIZES, seed=0):
    """He-initialized network: W ~ N(0, 2/fan_in), biases zero."""
    if len(layer_sizes) < 2:
        raise InvariantViolation("need at least an input and an output layer")
    rng = rng_from_seed(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return QNetwork(weights=weights, biases=biases)


def _forward_pass(net, x):
    """Returns (output, pre-activations per hidden layer, post-relu activations)."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    h = np.atleast_2d(x)
    if h.shape[1] != net.layer_sizes[0]:
        raise InvariantViolation(
            f"input has {h.shape[1]} features, network expects {net.layer_sizes[0]}"
        )
    pre, post = [], [h]
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = post[-1] @ w.T + b
        if i < last:
            pre.append(z)
            post.append(np.maximum(z, 0.0))
        else:
            out = z
    return (out[0] if squeeze else out), pre, post


def forward(net, x):
    """Q values for a single input vector or a batch of rows."""
    q, _, _ = _forward_pass(net, x)
    if not np.isfinite(q).all():
        raise NumericalAbort("network produced non-finite Q values")
    return q


def backward(net, x, grad_wrt_output):
    """Exact gradients of <grad_wrt_output, forward(net, x)> per parameter.

    For batched input the inner product sums over rows. Returns gradients in
    the same flat order as ``net.parameters()``.
    """
    _, pre, post = _forward_pass(net, x)
    g = np.atleast_2d(np.asarray(grad_wrt_output, dtype=np.float64))
    grads = [None] * (2 * len(net.weights))
    for i in range(len(net.weights) - 1, -1, -1):
        grads[2 * i] = g.T @ post[i]
        grads[2 * i + 1] = g.sum(axis=0)
        if i > 0:
            g = (g @ net.weights[i]) * (pre[i - 1] > 0.0)
    return grads


@dataclass
class AdamState:
    """Adam moment accumulators plus hyperparameters, shapes mirror the network."""

    m: list
    v: list
    t: int = 0
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_network(cls, net, learning_rate=0.001):
        params = net.parameters()
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            learning_rate=learning_rate,
        )


def adam_step(net, grads, adam):
    """One bias-corrected Adam update, applied in place."""
    params = net.parameters()
    if len(grads) != len(params):
        raise InvariantViolation("gradient list does not match parameter list")
    adam.t += 1
    c1 = 1.0 - adam.beta1**adam.t
    c2 = 1.0 - adam.beta2**adam.t
    for p, g, m, v in zip(params, grads, adam.m, adam.v):
        m *= adam.beta1
        m += (1.0 - adam.beta1) * g
        v *= adam.beta2
        v += (1.0 - adam.beta2) * np.square(g)
        p -= adam.learning_rate * (m / c1) / (np.sqrt(v / c2) + adam.eps)


def clip_gradients(grads, max_norm):
    """Scale the whole gradient list so its global L2 norm is at most max_norm."""
    total = np.sqrt(sum(float(np.sum(np.square(g))) for g in grads))
    if total > max_norm > 0.0:
        scale = max_norm / total
        grads = [g * scale for g in grads]
    return grads


def sync_target(net):
    """Value-independent deep copy used as the frozen TD-target network."""
    return QNetwork(
        weights=[w.copy() for w in net.weights],
        biases=[b.copy() for b in net.biases],
    )


def _encode_array(arr):
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii")


def _decode_array(text, shape, name):
    try:
        raw = base64.b64decode(text, validate=True)
    except Exception as exc:
        raise InvariantViolation(f"corrupted payload in block '{name}'") from exc
    expected = int(np.prod(shape, dtype=np.int64)) * 8
    if len(raw) != expected:
        raise InvariantViolation(
            f"corrupted payload in block '{name}': {len(raw)} bytes, expected {expected}"
        )
    return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)


def checkpoint_to_doc(net, adam=None, metadata=None):
    """Lossless JSON-able checkpoint: shapes, base64 float64 blocks, metadata."""
    names = _param_names(len(net.weights))
    params = net.parameters()
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "metadata": dict(metadata or {}),
        "layer_sizes": list(net.layer_sizes),
        "shapes": {n: list(p.shape) for n, p in zip(names, params)},
        "params": {n: _encode_array(p) for n, p in zip(names, params)},
    }
    if adam is not None:
        doc["adam"] = {
            "t": adam.t,
            "learning_rate": adam.learning_rate,
            "beta1": adam.beta1,
            "beta2": adam.beta2,
            "eps": adam.eps,
            "m": {n: _encode_array(a) for n, a in zip(names, adam.m)},
            "v": {n: _encode_array(a) for n, a in zip(names, adam.v)},
        }
    return doc


def checkpoint_from_doc(doc, expected_layer_sizes=None):
    """Rebuild (network, adam_state_or_None, metadata) from a checkpoint document."""
    if not isinstance(doc, dict):
        raise InvariantViolation("checkpoint document is not a JSON object")
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise InvariantViolation(
            f"checkpoint format version {doc.get('format_version')!r}, "
            f"expected {CHECKPOINT_VERSION}"
        )
    try:
        layer_sizes = tuple(int(s) for s in doc["layer_sizes"])
        shapes = doc["shapes"]
        blocks = doc["params"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvariantViolation(f"malformed checkpoint document: {exc}") from exc
    if expected_layer_sizes is not None and layer_sizes != tuple(expected_layer_sizes):
        raise InvariantViolation(
            f"shape mismatch: checkpoint is {layer_sizes}, expected {tuple(expected_layer_sizes)}"
        )
    names = _param_names(len(layer_sizes) - 1)
    for n in names:
        if n not in shapes or n not in blocks:
            raise InvariantViolation(f"checkpoint missing parameter block '{n}'")
    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(layer_sizes, layer_sizes[1:]), start=1):
        w_shape, b_shape = tuple(shapes[f"W{i}"]), tuple(shapes[f"b{i}"])
        if w_shape != (fan_out, fan_in) or b_shape != (fan_out,):
            raise InvariantViolation(
                f"shape mismatch in layer {i}: {w_shape}/{b_shape} vs {(fan_out, fan_in)}"
            )
        weights.append(_decode_array(blocks[f"W{i}"], w_shape, f"W{i}"))
        biases.append(_decode_array(blocks[f"b{i}"], b_shape, f"b{i}"))
    net = QNetwork(weights=weights, biases=biases)
    if not all(np.isfinite(p).all() for p in net.parameters()):
        raise InvariantViolation("checkpoint contains non-finite parameters")
    adam = None
    if doc.get("adam") is not None:
        a = doc["adam"]
        try:
            adam = AdamState(
                m=[_decode_array(a["m"][n], shapes[n], f"m.{n}") for n in names],
                v=[_decode_array(a["v"][n], shapes[n], f"v.{n}") for n in names],
                t=int(a["t"]),
                learning_rate=float(a["learning_rate"]),
                beta1=float(a["beta1"]),
                beta2=float(a["beta2"]),
                eps=float(a["eps"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvariantViolation(f"malformed optimizer state: {exc}") from exc
    return net, adam, dict(doc.get("metadata") or {})


def dump_checkpoint(net, adam=None, metadata=None):
    return json.dumps(checkpoint_to_doc(net, adam, metadata)) + "\n"


def load_checkpoint(text, expected_layer_sizes=None):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvariantViolation(f"corrupted payload: {exc}") from exc
    return checkpoint_from_doc(doc, expected_layer_sizes)
