"""Dense feed-forward networks with explicit backprop and Adam, in float64.

Deliberately minimal: affine layers, a tanh/relu/linear hidden activation,
a linear output layer, exact reverse-mode gradients (parameters and input),
a bias-corrected adaptive-moment optimizer, a finite-difference gradient
checker, and a flat little-endian checkpoint format.

Checkpoint byte layout (all little-endian):
    8 bytes   magic b"ARISMLP1"
    uint32    number of entries in the layer-size list
    int64[]   layer sizes
    uint32    activation tag length, then that many UTF-8 bytes
    float64[] for each layer: weight matrix (row-major), then bias vector
"""

from __future__ import annotations

import struct

import numpy as np

from .numerics import RngStream

_MAGIC = b"ARISMLP1"
_ACTIVATIONS = ("tanh", "relu", "linear")


class Mlp:
    """Multi-layer perceptron; weights[i] has shape (sizes[i], sizes[i+1])."""

    def __init__(self, sizes, weights, biases, activation: str = "tanh"):
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.sizes = [int(s) for s in sizes]
        if len(self.sizes) < 2:
            raise ValueError("need at least an input and an output size")
        self.activation = activation
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[i], self.sizes[i + 1]) or b.shape != (self.sizes[i + 1],):
                raise ValueError(f"layer {i} parameter shapes do not chain")

    @classmethod
    def initialized(cls, sizes, rng: RngStream, activation: str = "tanh") -> "Mlp":
        """Glorot-uniform weights, zero biases."""
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.gen.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(sizes, weights, biases, activation)

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list [W0, b0, W1, b1, ...] (live references)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy(self) -> "Mlp":
        return Mlp(self.sizes, [w.copy() for w in self.weights],
                   [b.copy() for b in self.biases], self.activation)

    def _act(self, z: np.ndarray) -> np.ndarray:
        if self.activation == "tanh":
            return np.tanh(z)
        if self.activation == "relu":
            return np.maximum(z, 0.0)
        return z

    def _act_grad_from(self, z: np.ndarray, a: np.ndarray) -> np.ndarray:
        if self.activation == "tanh":
            return 1.0 - a * a
        if self.activation == "relu":
            return (z > 0.0).astype(float)
        return np.ones_like(z)

    def forward(self, x: np.ndarray):
        """Returns (output, cache); accepts (d_in,) or (batch, d_in)."""
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.sizes[0]:
            raise ValueError(f"input dim {x.shape[1]} != {self.sizes[0]}")
        acts = [x]
        pre = []
        h = x
        last = self.num_layers - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            h = z if i == last else self._act(z)
            acts.append(h)
        cache = (acts, pre, squeeze)
        return (h[0] if squeeze else h), cache

    def backward(self, cache, grad_out: np.ndarray):
        """Exact reverse-mode gradients.

        Returns (param_grads, input_grad); param_grads matches
        ``parameters()`` order and sums over the batch (callers fold any
        1/batch factor into ``grad_out``).
        """
        acts, pre, squeeze = cache
        delta = np.asarray(grad_out, dtype=float)
        if squeeze and delta.ndim == 1:
            delta = delta[None, :]
        grads = [None] * (2 * self.num_layers)
        for i in range(self.num_layers - 1, -1, -1):
            grads[2 * i] = acts[i].T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            delta = delta @ self.weights[i].T
            if i > 0:
                delta = delta * self._act_grad_from(pre[i - 1], acts[i])
        input_grad = delta[0] if squeeze else delta
        return grads, input_grad


class AdamState:
    """Per-parameter-list moment accumulators for the adaptive update."""

    def __init__(self, params, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]


def adam_step(params, grads, state: AdamState):
    """Bias-corrected adaptive-moment update, in place; returns params."""
    if len(params) != len(state.m) or len(params) != len(grads):
        raise ValueError("parameter/gradient/state lengths disagree")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params


def gradient_check(net: Mlp, loss_and_grads, rng: RngStream,
                   num_checks: int = 40, h: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_and_grads(net) -> (loss, param_grads)`` must be deterministic
    (freeze any sampling noise).  A random subset of coordinates is probed.
    """
    _, grads = loss_and_grads(net)
    params = net.parameters()
    flat_sizes = [p.size for p in params]
    total = sum(flat_sizes)
    if total == 0:
        return 0.0
    picks = rng.gen.integers(0, total, size=min(num_checks, total))
    max_err = 0.0
    for flat_idx in picks:
        pi, offset = 0, int(flat_idx)
        while offset >= flat_sizes[pi]:
            offset -= flat_sizes[pi]
            pi += 1
        view = params[pi].reshape(-1)
        original = view[offset]
        view[offset] = original + h
        loss_plus, _ = loss_and_grads(net)
        view[offset] = original - h
        loss_minus, _ = loss_and_grads(net)
        view[offset] = original
        fd = (loss_plus - loss_minus) / (2.0 * h)
        an = grads[pi].reshape(-1)[offset]
        denom = max(abs(fd) + abs(an), 1e-8)
        max_err = max(max_err, abs(fd - an) / denom)
    return max_err


def save_mlp(net: Mlp, path):
    """Write the checkpoint format documented in the module docstring."""
    act = net.activation.encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(net.sizes)))
        f.write(np.asarray(net.sizes, dtype="<i8").tobytes())
        f.write(struct.pack("<I", len(act)))
        f.write(act)
        for w, b in zip(net.weights, net.biases):
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_mlp(path) -> Mlp:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:8] != _MAGIC:
        raise ValueError(f"{path}: not a network checkpoint")
    off = 8
    (n_sizes,) = struct.unpack_from("<I", blob, off)
    off += 4
    sizes = np.frombuffer(blob, dtype="<i8", count=n_sizes, offset=off).tolist()
    off += 8 * n_sizes
    (act_len,) = struct.unpack_from("<I", blob, off)
    off += 4
    activation = blob[off:off + act_len].decode("utf-8")
    off += act_len
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = np.frombuffer(blob, dtype="<f8", count=fan_in * fan_out, offset=off)
        off += 8 * fan_in * fan_out
        weights.append(w.reshape(fan_in, fan_out).copy())
        b = np.frombuffer(blob, dtype="<f8", count=fan_out, offset=off)
        off += 8 * fan_out
        biases.append(b.copy())
    if off != len(blob):
        raise ValueError(f"{path}: trailing bytes in checkpoint")
    return Mlp(sizes, weights, biases, activation)
