"""Small fully connected networks with hand-written backpropagation.

Only the topology the estimators need is supported: dense layers, ELU hidden
activations and an identity or softplus output.  Everything runs in float64.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "elu",
    "elu_grad",
    "softplus",
    "softplus_grad",
    "Mlp",
    "OptimizerState",
    "make_optimizer",
    "optimizer_step",
]

HIDDEN_ACTIVATIONS = ("elu",)
OUTPUT_ACTIVATIONS = ("identity", "softplus")


def elu(x):
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0.0, x, np.expm1(np.minimum(x, 0.0)))


def elu_grad(x):
    """Derivative of ELU; the right derivative (1) is used at 0."""
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0.0, 1.0, np.exp(np.minimum(x, 0.0)))


def softplus(x):
    # log(1 + e^x) = max(x, 0) + log1p(e^-|x|) never overflows
    x = np.asarray(x, dtype=float)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def softplus_grad(x):
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass
class Mlp:
    """Dense network mapping R^d to R^m.

    ``weights[i]`` has shape (layer_dims[i], layer_dims[i+1]) so a batch of row
    vectors propagates as ``x @ W + b``.  With a softplus output every value is
    clipped from below at ``output_floor``.
    """

    layer_dims: tuple
    weights: list
    biases: list
    hidden_activation: str = "elu"
    output_activation: str = "identity"
    output_floor: float = 0.0

    def __post_init__(self):
        self.layer_dims = tuple(int(n) for n in self.layer_dims)
        if len(self.layer_dims) < 2 or min(self.layer_dims) < 1:
            raise ConfigError(f"invalid layer_dims {self.layer_dims}")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ConfigError(f"unknown hidden activation {self.hidden_activation!r}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ConfigError(f"unknown output activation {self.output_activation!r}")
        if self.output_floor < 0.0:
            raise ConfigError("output_floor must be non-negative")
        if self.output_activation != "softplus" and self.output_floor != 0.0:
            raise ConfigError("output_floor only applies to a softplus output")
        n = len(self.layer_dims) - 1
        if len(self.weights) != n or len(self.biases) != n:
            raise ConfigError("one weight matrix and bias vector per layer required")
        self.weights = [np.array(w, dtype=float) for w in self.weights]
        self.biases = [np.array(b, dtype=float) for b in self.biases]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_dims[i], self.layer_dims[i + 1])
            if w.shape != shape or b.shape != (shape[1],):
                raise ConfigError(f"layer {i}: expected W{shape} and b({shape[1]},)")

    @classmethod
    def init(cls, layer_dims, seed, output_activation="identity", output_floor=0.0):
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases."""
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
            bound = math.sqrt(1.0 / fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(tuple(layer_dims), weights, biases, "elu", output_activation, output_floor)

    @property
    def input_dim(self):
        return self.layer_dims[0]

    @property
    def output_dim(self):
        return self.layer_dims[-1]

    def params(self):
        """Parameters in a fixed order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self):
        return Mlp(
            self.layer_dims,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.hidden_activation,
            self.output_activation,
            self.output_floor,
        )

    def _as_batch(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ConfigError(f"expected inputs of dimension {self.input_dim}, got shape {x.shape}")
        return x, single

    def forward(self, x, return_cache=False):
        """Evaluate the network on one input vector or a batch of rows."""
        x, single = self._as_batch(x)
        acts = [x]
        pre = []
        a = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre.append(z)
            if i < last:
                a = elu(z)
            elif self.output_activation == "softplus":
                a = np.maximum(softplus(z), self.output_floor)
            else:
                a = z
            acts.append(a)
        out = a[0] if single else a
        if return_cache:
            return out, (acts, pre, single)
        return out

    __call__ = forward

    def backward(self, cache, upstream):
        """Reverse-mode gradients for the batch held in ``cache``.

        ``upstream`` is dLoss/dOutput with the same shape as the forward output.
        Returns (parameter gradients in :meth:`params` order, input gradient).
        """
        acts, pre, single = cache
        g = np.asarray(upstream, dtype=float)
        if single:
            g = g[None, :]
        if g.shape != acts[-1].shape:
            raise ConfigError(f"upstream gradient shape {g.shape} != output shape {acts[-1].shape}")
        last = len(self.weights) - 1
        grads = [None] * (2 * len(self.weights))
        for i in range(last, -1, -1):
            z = pre[i]
            if i < last:
                g = g * elu_grad(z)
            elif self.output_activation == "softplus":
                # the floor is flat, so it passes no gradient
                g = np.where(softplus(z) > self.output_floor, g * softplus_grad(z), 0.0)
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.weights[i].T
        return grads, (g[0] if single else g)

    def param_hash(self):
        h = hashlib.sha256()
        for p in self.params():
            h.update(np.ascontiguousarray(p).tobytes())
        return h.hexdigest()

    def to_dict(self):
        return {
            "layer_dims": list(self.layer_dims),
            "hidden_activation": self.hidden_activation,
            "output_activation": self.output_activation,
            "output_floor": self.output_floor,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            tuple(d["layer_dims"]),
            [np.array(w, dtype=float).reshape(a, b) for w, a, b in
             zip(d["weights"], d["layer_dims"][:-1], d["layer_dims"][1:])],
            [np.array(b, dtype=float) for b in d["biases"]],
            d.get("hidden_activation", "elu"),
            d.get("output_activation", "identity"),
            float(d.get("output_floor", 0.0)),
        )

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass
class OptimizerState:
    """Moment accumulators for Adam or AdaMax (Keras conventions)."""

    kind: str
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    step_count: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("adam", "adamax"):
            raise ConfigError(f"unknown optimizer {self.kind!r}")
        if not self.learning_rate > 0.0:
            raise ConfigError("learning_rate must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigError("beta1 and beta2 must lie in [0, 1)")
        if not self.epsilon > 0.0:
            raise ConfigError("epsilon must be positive")


def make_optimizer(kind, params, learning_rate, beta1=0.9, beta2=0.999, epsilon=1e-7):
    return OptimizerState(
        kind,
        learning_rate,
        beta1,
        beta2,
        epsilon,
        0,
        [np.zeros_like(p) for p in params],
        [np.zeros_like(p) for p in params],
    )


def optimizer_step(state, params, grads):
    """Apply one update in place to ``params`` and ``state``."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ConfigError("parameter, gradient and accumulator lists differ in length")
    state.step_count += 1
    t = state.step_count
    b1, b2, lr, eps = state.beta1, state.beta2, state.learning_rate, state.epsilon
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ConfigError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        if state.kind == "adam":
            v *= b2
            v += (1.0 - b2) * g * g
            lr_t = lr * math.sqrt(1.0 - b2**t) / (1.0 - b1**t)
            p -= lr_t * m / (np.sqrt(v) + eps)
        else:
            np.maximum(b2 * v, np.abs(g), out=v)
            p -= (lr / (1.0 - b1**t)) * m / (v + eps)
    return params, state
