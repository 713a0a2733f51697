"""Minimal dense networks with hand-written backprop and Adam.

Layers compute ``x @ W + b`` with ``W`` of shape (in, out). ReLU uses the
subgradient 0 at exactly 0.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import InvalidInput

ACTIVATIONS = ("relu", "identity")


@dataclass
class Dense:
    W: np.ndarray
    b: np.ndarray
    activation: str = "identity"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise InvalidInput(f"unknown activation {self.activation!r}")
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[1],):
            raise InvalidInput("bias length must match layer output width")

    @property
    def dims(self):
        return self.W.shape


@dataclass
class DenseNet:
    layers: list

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if a.W.shape[1] != b.W.shape[0]:
                raise InvalidInput(f"layer widths do not chain: {a.W.shape} -> {b.W.shape}")

    @classmethod
    def init(cls, dims, activations, rng: np.random.Generator, zero_last: bool = False) -> "DenseNet":
        """He-style uniform init; ``activations`` has one entry per layer."""
        if len(activations) != len(dims) - 1:
            raise InvalidInput("need one activation per layer")
        layers = []
        for k, (i, o) in enumerate(zip(dims[:-1], dims[1:])):
            bound = np.sqrt(6.0 / i) if activations[k] == "relu" else np.sqrt(3.0 / i)
            W = rng.uniform(-bound, bound, size=(i, o))
            if zero_last and k == len(dims) - 2:
                W = np.zeros((i, o))
            layers.append(Dense(W, np.zeros(o), activations[k]))
        return cls(layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].W.shape[0]

    @property
    def out_dim(self) -> int:
        return self.layers[-1].W.shape[1]

    def params(self) -> list:
        out = []
        for layer in self.layers:
            out += [layer.W, layer.b]
        return out

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    def copy(self) -> "DenseNet":
        return DenseNet([Dense(l.W.copy(), l.b.copy(), l.activation) for l in self.layers])

    def __call__(self, x):
        return forward(self, x)[0]


def forward(net: DenseNet, inputs):
    """Return ``(output, cache)``; the cache holds each layer's input and pre-activation."""
    h = np.asarray(inputs, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != net.in_dim:
        raise InvalidInput(f"expected inputs of shape (batch, {net.in_dim}), got {h.shape}")
    cache = []
    for layer in net.layers:
        z = h @ layer.W + layer.b
        cache.append((h, z))
        h = np.maximum(z, 0.0) if layer.activation == "relu" else z
    return h, cache


def backward(net: DenseNet, cache, grad_out):
    """Gradients ``[dW0, db0, dW1, ...]`` and the gradient w.r.t. the network input."""
    g = np.asarray(grad_out, dtype=np.float64)
    if len(cache) != len(net.layers) or g.shape != (cache[-1][1].shape):
        raise InvalidInput("gradient shape does not match the cached forward pass")
    grads = [None] * (2 * len(net.layers))
    for k in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[k]
        h, z = cache[k]
        if layer.activation == "relu":
            g = g * (z > 0.0)
        grads[2 * k] = h.T @ g
        grads[2 * k + 1] = g.sum(axis=0)
        g = g @ layer.W.T
    return grads, g


def mse_loss(pred, target):
    """Mean squared error over all elements and its gradient."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise InvalidInput(f"shape mismatch {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def cross_entropy_loss(logits, labels):
    """Mean softmax cross-entropy over the batch; gradient is (softmax - onehot) / batch."""
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    labels = np.atleast_1d(np.asarray(labels))
    n, k = logits.shape
    if labels.shape != (n,) or labels.min(initial=0) < 0 or labels.max(initial=0) >= k:
        raise InvalidInput("labels must be one class index in [0, K) per row")
    shifted = logits - logits.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logz
    rows = np.arange(n)
    loss = -float(logp[rows, labels].mean())
    grad = np.exp(logp)
    grad[rows, labels] -= 1.0
    return loss, grad / n


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params, **kw) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], **kw)


def adam_step(params, grads, state: AdamState):
    """One bias-corrected Adam update applied in place; returns ``params``."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise InvalidInput("params, grads and optimizer state must align")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g.shape != p.shape:
            raise InvalidInput("gradient shape does not match parameter")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params


def gradient_check(loss_and_grads: Callable, params, n_checks: int, rng: np.random.Generator,
                   h: float = 1e-5, floor: float = 1e-7) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_and_grads()`` must return ``(loss, grads)`` for the current values
    of ``params`` (mutated in place here). Entries are sampled uniformly over
    all parameters; ``floor`` guards the denominator for vanishing gradients.
    """
    _, grads = loss_and_grads()
    grads = [np.array(g, copy=True) for g in grads]
    sizes = np.array([p.size for p in params])
    worst = 0.0
    for _ in range(n_checks):
        k = int(rng.choice(len(params), p=sizes / sizes.sum()))
        j = int(rng.integers(params[k].size))
        flat = params[k].reshape(-1)
        old = flat[j]
        flat[j] = old + h
        fp = loss_and_grads()[0]
        flat[j] = old - h
        fm = loss_and_grads()[0]
        flat[j] = old
        num = (fp - fm) / (2 * h)
        ana = grads[k].reshape(-1)[j]
        worst = max(worst, abs(num - ana) / max(abs(num), abs(ana), floor))
    return worst


# --- UMLW weight files -----------------------------------------------------

MAGIC = b"UMLW"
VERSION = 1


def save_umlw(net: DenseNet, path) -> Path:
    """Write ``path`` (binary weights) and ``path.json`` (architecture sidecar).

    Layout, little-endian: magic, u32 version, u32 layer count, then
    ``(u32 in, u32 out)`` per layer, then per layer the row-major float64
    weights followed by the bias.
    """
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(net.layers)))
        for layer in net.layers:
            fh.write(struct.pack("<II", *layer.W.shape))
        for layer in net.layers:
            fh.write(np.ascontiguousarray(layer.W, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(layer.b, dtype="<f8").tobytes())
    sidecar = {"format": "UMLW", "version": VERSION,
               "layers": [{"in": int(l.W.shape[0]), "out": int(l.W.shape[1]), "activation": l.activation}
                          for l in net.layers]}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2))
    return path


def load_umlw(path) -> DenseNet:
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != MAGIC:
        raise InvalidInput(f"{path} is not a UMLW file")
    version, n_layers = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise InvalidInput(f"unsupported UMLW version {version}")
    off = 12
    dims = []
    for _ in range(n_layers):
        dims.append(struct.unpack_from("<II", data, off))
        off += 8
    acts = ["identity"] * n_layers
    side = Path(str(path) + ".json")
    if side.exists():
        acts = [l["activation"] for l in json.loads(side.read_text())["layers"]]
    layers = []
    for (i, o), act in zip(dims, acts):
        W = np.frombuffer(data, dtype="<f8", count=i * o, offset=off).reshape(i, o).astype(np.float64)
        off += 8 * i * o
        b = np.frombuffer(data, dtype="<f8", count=o, offset=off).astype(np.float64)
        off += 8 * o
        layers.append(Dense(W, b, act))
    if off != len(data):
        raise InvalidInput(f"{path} has {len(data) - off} trailing bytes")
    return DenseNet(layers)
