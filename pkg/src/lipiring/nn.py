"""Small dense networks with hand-written backprop and Adam.

Parameters live in one flat float64 vector per network, laid out layer by
layer as a row-major ``(input_dim, output_dim)`` weight block followed by the
``output_dim`` biases. Everything downstream (migration copies, L2 diversity,
checkpoints) works on that vector directly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class Activation(str, enum.Enum):
    TANH = "tanh"
    SIGMOID = "sigmoid"
    IDENTITY = "identity"


@dataclass(frozen=True)
class LayerSpec:
    input_dim: int
    output_dim: int
    activation: Activation = Activation.TANH

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError(f"layer dims must be >= 1, got {self.input_dim}x{self.output_dim}")
        object.__setattr__(self, "activation", Activation(self.activation))

    @property
    def n_params(self) -> int:
        return self.input_dim * self.output_dim + self.output_dim


def mlp_specs(dims: list[int], hidden: Activation | str, output: Activation | str) -> tuple[LayerSpec, ...]:
    """Layer specs for an MLP with widths ``dims`` (input first, output last)."""
    if len(dims) < 2:
        raise ValueError("an MLP needs at least input and output widths")
    specs = []
    for i, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
        act = output if i == len(dims) - 2 else hidden
        specs.append(LayerSpec(a, b, Activation(act)))
    return tuple(specs)


def _check_chain(specs) -> tuple[LayerSpec, ...]:
    specs = tuple(specs)
    if not specs:
        raise ValueError("network needs at least one layer")
    for prev, nxt in zip(specs[:-1], specs[1:]):
        if prev.output_dim != nxt.input_dim:
            raise ValueError(
                f"layer dims do not chain: {prev.output_dim} -> {nxt.input_dim}"
            )
    return specs


@dataclass
class Network:
    layers: tuple[LayerSpec, ...]
    params: np.ndarray

    def __post_init__(self):
        self.layers = _check_chain(self.layers)
        self.params = np.asarray(self.params, dtype=np.float64)
        expected = sum(spec.n_params for spec in self.layers)
        if self.params.shape != (expected,):
            raise ValueError(f"expected {expected} params, got shape {self.params.shape}")

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].output_dim

    def copy(self) -> "Network":
        return Network(self.layers, self.params.copy())

    def unpack(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """(weight, bias) views into ``params``, one pair per layer."""
        out = []
        offset = 0
        for spec in self.layers:
            n_w = spec.input_dim * spec.output_dim
            w = self.params[offset:offset + n_w].reshape(spec.input_dim, spec.output_dim)
            offset += n_w
            b = self.params[offset:offset + spec.output_dim]
            offset += spec.output_dim
            out.append((w, b))
        return out


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.m.shape != self.v.shape:
            raise ValueError("Adam moment vectors must have the same shape")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.t < 0:
            raise ValueError("Adam step counter must be >= 0")

    @classmethod
    def zeros(cls, n: int, **kwargs) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), **kwargs)

    def copy(self) -> "AdamState":
        return AdamState(self.m.copy(), self.v.copy(), self.t, self.beta1, self.beta2, self.epsilon)


def init_network(specs, seed: int | np.random.Generator) -> Network:
    """Uniform fan-in init: weights in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases."""
    specs = _check_chain(specs)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    chunks = []
    for spec in specs:
        bound = 1.0 / math.sqrt(spec.input_dim)
        chunks.append(rng.uniform(-bound, bound, size=spec.input_dim * spec.output_dim))
        chunks.append(np.zeros(spec.output_dim))
    return Network(specs, np.concatenate(chunks))


def _activate(act: Activation, z: np.ndarray) -> np.ndarray:
    if act is Activation.TANH:
        return np.tanh(z)
    if act is Activation.SIGMOID:
        # split form avoids overflow in exp for large |z|
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    return z


def _activation_grad(act: Activation, a: np.ndarray) -> np.ndarray | None:
    """Derivative of the activation expressed through its output ``a``."""
    if act is Activation.TANH:
        return 1.0 - a * a
    if act is Activation.SIGMOID:
        return a * (1.0 - a)
    return None


@dataclass
class ForwardCache:
    inputs: list[np.ndarray] = field(default_factory=list)
    outputs: list[np.ndarray] = field(default_factory=list)
    squeeze: bool = False


def _as_batch(net: Network, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ValueError(f"expected input of width {net.input_dim}, got shape {x.shape}")
    return x, squeeze


def forward_with_cache(net: Network, x) -> tuple[np.ndarray, ForwardCache]:
    x, squeeze = _as_batch(net, x)
    cache = ForwardCache(squeeze=squeeze)
    h = x
    for spec, (w, b) in zip(net.layers, net.unpack()):
        cache.inputs.append(h)
        h = _activate(spec.activation, h @ w + b)
        cache.outputs.append(h)
    if not np.all(np.isfinite(h)):
        raise FloatingPointError("non-finite value in forward pass")
    return (h[0] if squeeze else h), cache


def forward(net: Network, x) -> np.ndarray:
    """Evaluate the network on one input vector or a batch (rows are samples)."""
    return forward_with_cache(net, x)[0]


def backward_from_cache(net: Network, cache: ForwardCache, output_grad) -> tuple[np.ndarray, np.ndarray]:
    """Return (param gradient, input gradient) for the upstream ``output_grad``.

    For batched input the parameter gradient is summed over rows.
    """
    g = np.asarray(output_grad, dtype=np.float64)
    if cache.squeeze:
        g = g[None, :] if g.ndim == 1 else g
    if g.shape != cache.outputs[-1].shape:
        raise ValueError(f"output_grad shape {g.shape} does not match output {cache.outputs[-1].shape}")
    per_layer = []
    weights = net.unpack()
    for i in range(len(net.layers) - 1, -1, -1):
        d_act = _activation_grad(net.layers[i].activation, cache.outputs[i])
        dz = g if d_act is None else g * d_act
        per_layer.append(((cache.inputs[i].T @ dz).ravel(), dz.sum(axis=0)))
        g = dz @ weights[i][0].T
    per_layer.reverse()
    param_grad = np.concatenate([part for pair in per_layer for part in pair])
    return param_grad, (g[0] if cache.squeeze else g)


def backward(net: Network, x, output_grad) -> np.ndarray:
    _, cache = forward_with_cache(net, x)
    return backward_from_cache(net, cache, output_grad)[0]


def adam_step(net: Network, grads, state: AdamState, lr: float) -> tuple[Network, AdamState]:
    """One bias-corrected Adam descent step. Returns new values; inputs are untouched."""
    if not lr > 0:
        raise ValueError(f"learning rate must be > 0, got {lr}")
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != net.params.shape:
        raise ValueError("gradient is not aligned with params")
    if not np.all(np.isfinite(grads)):
        raise FloatingPointError("non-finite gradient")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    params = net.params - lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return (
        Network(net.layers, params),
        AdamState(m, v, t, state.beta1, state.beta2, state.epsilon),
    )


def flatten_params(net: Network) -> np.ndarray:
    return net.params.copy()


def from_flat(layers, params) -> Network:
    return Network(tuple(layers), np.array(params, dtype=np.float64))
