"""Minimal dense encoder/decoder network with exact backprop and Adam.

Weights are stored as ``(out, in)`` matrices and a layer computes
``act(h @ W.T + b)``. Everything runs in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("linear", "tanh", "relu", "leaky_relu")


class ConfigurationError(ValueError):
    """Raised for inconsistent network or training configuration."""


class ShapeError(ValueError):
    """Raised when an array does not have the shape an operation expects."""


@dataclass(frozen=True)
class LayerSpec:
    input_width: int
    output_width: int
    activation: str = "leaky_relu"
    slope: float = 0.01

    def __post_init__(self):
        if self.input_width < 1 or self.output_width < 1:
            raise ConfigurationError(f"layer widths must be >= 1, got {self.input_width}->{self.output_width}")
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}; expected one of {ACTIVATIONS}")


@dataclass
class Layer:
    W: np.ndarray
    b: np.ndarray
    activation: str = "leaky_relu"
    slope: float = 0.01

    @property
    def input_width(self) -> int:
        return self.W.shape[1]

    @property
    def output_width(self) -> int:
        return self.W.shape[0]


@dataclass
class DenseNet:
    """Encoder layers followed by decoder layers.

    ``n_encoder`` layers map the input to the latent code; the rest map it
    back to input space.
    """

    layers: list[Layer]
    n_encoder: int

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_width

    @property
    def latent_dim(self) -> int:
        return self.layers[self.n_encoder - 1].output_width

    @property
    def encoder_layers(self) -> list[Layer]:
        return self.layers[: self.n_encoder]

    @property
    def decoder_layers(self) -> list[Layer]:
        return self.layers[self.n_encoder :]

    def parameters(self) -> list[np.ndarray]:
        """Flat list ``[W0, b0, W1, b1, ...]``; the arrays are live views."""
        out = []
        for layer in self.layers:
            out.extend((layer.W, layer.b))
        return out

    def copy(self) -> "DenseNet":
        return DenseNet(
            [Layer(l.W.copy(), l.b.copy(), l.activation, l.slope) for l in self.layers],
            self.n_encoder,
        )


@dataclass
class ForwardCache:
    inputs: np.ndarray
    pre: list[np.ndarray] = field(default_factory=list)
    post: list[np.ndarray] = field(default_factory=list)


def _activate(a: np.ndarray, kind: str, slope: float) -> np.ndarray:
    if kind == "linear":
        return a
    if kind == "tanh":
        return np.tanh(a)
    if kind == "relu":
        return np.maximum(a, 0.0)
    return np.where(a > 0, a, slope * a)


def _activation_grad(a: np.ndarray, h: np.ndarray, kind: str, slope: float) -> np.ndarray:
    # a: pre-activation, h: post-activation
    if kind == "linear":
        return np.ones_like(a)
    if kind == "tanh":
        return 1.0 - h * h
    if kind == "relu":
        return (a > 0).astype(a.dtype)
    return np.where(a > 0, 1.0, slope)


def mirrored_specs(
    input_dim: int,
    hidden_widths=(10, 10, 10, 10, 10),
    latent_dim: int = 1,
    activation: str = "leaky_relu",
    slope: float = 0.01,
) -> list[LayerSpec]:
    """Symmetric encoder/decoder layer specs.

    Hidden layers use ``activation``; the bottleneck layer and the final
    decoder layer are linear so neither the code nor the reconstruction is
    range-limited.
    """
    enc = [input_dim, *hidden_widths, latent_dim]
    widths = enc + enc[-2::-1]
    n_layers = len(widths) - 1
    specs = []
    for i in range(n_layers):
        linear = i == len(enc) - 2 or i == n_layers - 1
        specs.append(LayerSpec(widths[i], widths[i + 1], "linear" if linear else activation, slope))
    return specs


def init_dense_net(specs, latent_dim: int, rng_seed=0) -> DenseNet:
    """Build a network from ``specs`` with fan-in scaled Gaussian weights and zero biases.

    The encoder ends at the first layer whose output width equals
    ``latent_dim``.
    """
    specs = list(specs)
    if not specs:
        raise ConfigurationError("at least one layer is required")
    for i in range(len(specs) - 1):
        if specs[i].output_width != specs[i + 1].input_width:
            raise ConfigurationError(
                f"layer {i} output width {specs[i].output_width} does not match "
                f"layer {i + 1} input width {specs[i + 1].input_width}"
            )
    if specs[0].input_width != specs[-1].output_width:
        raise ConfigurationError(
            f"network must map R^D to R^D, got {specs[0].input_width} -> {specs[-1].output_width}"
        )
    n_encoder = next((i + 1 for i, s in enumerate(specs) if s.output_width == latent_dim), None)
    if n_encoder is None:
        raise ConfigurationError(f"no layer has output width equal to latent_dim={latent_dim}")

    rng = np.random.default_rng(rng_seed)
    layers = []
    for s in specs:
        W = rng.normal(0.0, np.sqrt(1.0 / s.input_width), size=(s.output_width, s.input_width))
        layers.append(Layer(W, np.zeros(s.output_width), s.activation, s.slope))
    return DenseNet(layers, n_encoder)


def _check_batch(net: DenseNet, batch) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != net.input_dim:
        raise ShapeError(f"expected a batch of shape (B, {net.input_dim}), got {batch.shape}")
    return batch


def forward(net: DenseNet, batch) -> tuple[np.ndarray, ForwardCache]:
    batch = _check_batch(net, batch)
    cache = ForwardCache(batch)
    h = batch
    for layer in net.layers:
        a = h @ layer.W.T + layer.b
        h = _activate(a, layer.activation, layer.slope)
        cache.pre.append(a)
        cache.post.append(h)
    return h, cache


def encode(net: DenseNet, batch) -> np.ndarray:
    h = _check_batch(net, batch)
    for layer in net.encoder_layers:
        h = _activate(h @ layer.W.T + layer.b, layer.activation, layer.slope)
    return h


def backward(net: DenseNet, cache: ForwardCache, output_grad) -> list[np.ndarray]:
    """Reverse-mode gradients, returned in the order of ``net.parameters()``."""
    if len(cache.pre) != len(net.layers):
        raise ShapeError(f"cache depth {len(cache.pre)} does not match {len(net.layers)} layers")
    g = np.asarray(output_grad, dtype=np.float64)
    if g.shape != cache.post[-1].shape:
        raise ShapeError(f"output_grad shape {g.shape} does not match output {cache.post[-1].shape}")
    grads: list[np.ndarray] = [None] * (2 * len(net.layers))
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        a, h = cache.pre[i], cache.post[i]
        if a.shape[1] != layer.output_width:
            raise ShapeError(f"cache entry {i} does not match layer width {layer.output_width}")
        g = g * _activation_grad(a, h, layer.activation, layer.slope)
        h_in = cache.post[i - 1] if i > 0 else cache.inputs
        grads[2 * i] = g.T @ h_in
        grads[2 * i + 1] = g.sum(axis=0)
        if i > 0:
            g = g @ layer.W
    return grads


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0

    @classmethod
    def like(cls, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], lr, beta1, beta2, eps)


def adam_step(state: AdamState, params, grads) -> AdamState:
    """Bias-corrected Adam update applied to ``params`` in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError("params, grads and optimizer state must have the same length")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"shape mismatch: param {p.shape}, grad {g.shape}, state {m.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return state


@dataclass
class RowAdamState:
    """Adam for a vector whose entries are updated only when selected.

    Each entry keeps its own step count so bias correction matches the
    number of times that entry has actually been updated.
    """

    m: np.ndarray
    v: np.ndarray
    t: np.ndarray
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def like(cls, param, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8) -> "RowAdamState":
        return cls(np.zeros_like(param), np.zeros_like(param), np.zeros(param.shape, dtype=np.int64), lr, beta1, beta2, eps)


def row_adam_step(state: RowAdamState, param: np.ndarray, rows, grad) -> RowAdamState:
    rows = np.asarray(rows)
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != rows.shape:
        raise ShapeError(f"grad shape {grad.shape} does not match rows {rows.shape}")
    b1, b2 = state.beta1, state.beta2
    state.t[rows] += 1
    t = state.t[rows]
    m = b1 * state.m[rows] + (1.0 - b1) * grad
    v = b2 * state.v[rows] + (1.0 - b2) * grad * grad
    state.m[rows] = m
    state.v[rows] = v
    param[rows] -= state.lr * (m / (1.0 - b1**t)) / (np.sqrt(v / (1.0 - b2**t)) + state.eps)
    return state
