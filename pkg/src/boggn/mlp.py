"""Feed-forward binary classifier on a flat parameter vector.

The network maps ``x`` to a scalar logit ``f(x; theta)``; the class-1
probability is ``sigmoid(f)``. All parameters live in one flat vector laid
out layer by layer as ``W`` (``fan_in x fan_out``, row-major) followed by
``b`` (``fan_out``) when biases are enabled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

__all__ = [
    "MlpParams",
    "MlpSpec",
    "forward",
    "init_params",
    "jacobian",
    "logits",
    "loss_and_grad",
    "param_jacobian",
    "probabilities",
]

PROB_CLAMP = 1e-12
ACTIVATIONS = ("relu", "elu", "tanh")


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden_widths: tuple = (32, 32)
    activation: str = "relu"
    bias: bool = True

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError("input_dim must be positive")
        widths = tuple(int(w) for w in self.hidden_widths)
        if any(w < 1 for w in widths):
            raise ValueError("hidden widths must be positive")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        object.__setattr__(self, "hidden_widths", widths)

    @property
    def layer_sizes(self) -> tuple:
        return (self.input_dim, *self.hidden_widths, 1)

    @property
    def layer_shapes(self) -> list:
        sizes = self.layer_sizes
        return [(sizes[i], sizes[i + 1]) for i in range(len(sizes) - 1)]

    @property
    def n_params(self) -> int:
        extra = 1 if self.bias else 0
        return sum((fan_in + extra) * fan_out for fan_in, fan_out in self.layer_shapes)

    def to_dict(self) -> dict:
        return {"input_dim": self.input_dim, "hidden_widths": list(self.hidden_widths),
                "activation": self.activation, "bias": self.bias}

    @classmethod
    def from_dict(cls, d: dict) -> "MlpSpec":
        return cls(int(d["input_dim"]), tuple(d["hidden_widths"]), d["activation"],
                   bool(d.get("bias", True)))


@dataclass(frozen=True)
class MlpParams:
    flat: np.ndarray
    spec: MlpSpec = field(repr=False)

    def __post_init__(self):
        flat = np.array(self.flat, dtype=float).reshape(-1)
        if flat.size != self.spec.n_params:
            raise ValueError(f"expected {self.spec.n_params} parameters, got {flat.size}")
        if not np.all(np.isfinite(flat)):
            raise ValueError("parameters must be finite")
        flat.setflags(write=False)
        object.__setattr__(self, "flat", flat)

    def layers(self):
        return _unflatten(self.flat, self.spec)

    def to_json(self) -> str:
        return json.dumps({"spec": self.spec.to_dict(), "flat": self.flat.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "MlpParams":
        d = json.loads(text)
        return cls(np.array(d["flat"], dtype=float), MlpSpec.from_dict(d["spec"]))


def _unflatten(flat, spec):
    layers = []
    offset = 0
    for fan_in, fan_out in spec.layer_shapes:
        W = flat[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out)
        offset += fan_in * fan_out
        if spec.bias:
            b = flat[offset:offset + fan_out]
            offset += fan_out
        else:
            b = None
        layers.append((W, b))
    return layers


def init_params(spec: MlpSpec, rng: np.random.Generator) -> MlpParams:
    """Glorot-uniform weights, zero biases."""
    chunks = []
    for fan_in, fan_out in spec.layer_shapes:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        chunks.append(rng.uniform(-limit, limit, size=fan_in * fan_out))
        if spec.bias:
            chunks.append(np.zeros(fan_out))
    return MlpParams(np.concatenate(chunks), spec)


def _activate(name, a):
    if name == "relu":
        return np.maximum(a, 0.0)
    if name == "tanh":
        return np.tanh(a)
    return np.where(a > 0, a, np.expm1(np.minimum(a, 0.0)))


def _activation_grad(name, a, h):
    # derivative w.r.t. the pre-activation a, given h = act(a)
    if name == "relu":
        return (a > 0).astype(a.dtype)
    if name == "tanh":
        return 1.0 - h * h
    return np.where(a > 0, 1.0, h + 1.0)


def _as_batch(spec, X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != spec.input_dim:
        raise ValueError(f"expected inputs with {spec.input_dim} features, got shape {X.shape}")
    return X


def _forward_cache(flat, spec, X):
    layers = _unflatten(flat, spec)
    inputs, pre = [X], []
    h = X
    for i, (W, b) in enumerate(layers):
        a = h @ W
        if b is not None:
            a = a + b
        if i < len(layers) - 1:
            pre.append(a)
            h = _activate(spec.activation, a)
            inputs.append(h)
        else:
            out = a[:, 0]
    return layers, inputs, pre, out


def _backward(layers, inputs, pre, spec, upstream, per_sample):
    """Backpropagate ``upstream = dL/dlogit`` (shape ``(n,)``).

    Returns the summed gradient ``(P,)``, or per-sample gradients ``(n, P)``.
    """
    n = upstream.shape[0]
    delta = upstream[:, None]
    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        W, b = layers[i]
        h = inputs[i]
        if per_sample:
            gW = (h[:, :, None] * delta[:, None, :]).reshape(n, -1)
            parts = [gW, delta] if b is not None else [gW]
        else:
            gW = (h.T @ delta).reshape(-1)
            parts = [gW, delta.sum(axis=0)] if b is not None else [gW]
        grads[i] = parts
        if i > 0:
            delta = (delta @ W.T) * _activation_grad(spec.activation, pre[i - 1], inputs[i])
    flat_parts = [p for layer in grads for p in layer]
    return np.concatenate(flat_parts, axis=1 if per_sample else 0)


def logits(params: MlpParams, X) -> np.ndarray:
    X = _as_batch(params.spec, X)
    return _forward_cache(params.flat, params.spec, X)[3]


def probabilities(params: MlpParams, X) -> np.ndarray:
    return expit(logits(params, X))


def forward(params: MlpParams, x) -> tuple:
    """Logit and class-1 probability at a single point."""
    x = np.asarray(x, dtype=float)
    if x.shape != (params.spec.input_dim,):
        raise ValueError(f"expected a point of length {params.spec.input_dim}, got shape {x.shape}")
    f = float(logits(params, x[None, :])[0])
    return f, float(expit(f))


def jacobian(params: MlpParams, X) -> np.ndarray:
    """Per-sample gradients of the logit, shape ``(n, P)``."""
    X = _as_batch(params.spec, X)
    layers, inputs, pre, out = _forward_cache(params.flat, params.spec, X)
    return _backward(layers, inputs, pre, params.spec, np.ones_like(out), per_sample=True)


def logits_and_jacobian(params: MlpParams, X) -> tuple:
    X = _as_batch(params.spec, X)
    layers, inputs, pre, out = _forward_cache(params.flat, params.spec, X)
    J = _backward(layers, inputs, pre, params.spec, np.ones_like(out), per_sample=True)
    return out, J


def param_jacobian(params: MlpParams, x) -> np.ndarray:
    """Exact gradient of the logit at ``x`` with respect to every parameter."""
    x = np.asarray(x, dtype=float)
    if x.shape != (params.spec.input_dim,):
        raise ValueError(f"expected a point of length {params.spec.input_dim}, got shape {x.shape}")
    return jacobian(params, x[None, :])[0]


def bernoulli_nll(f, z):
    """Per-sample negative log-likelihood and its derivative w.r.t. the logit.

    Probabilities are clamped to ``[PROB_CLAMP, 1 - PROB_CLAMP]`` inside the
    logs; where the clamp is active the derivative is zero.
    """
    p = expit(f)
    pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    nll = -(z * np.log(pc) + (1 - z) * np.log1p(-pc))
    active = (p > PROB_CLAMP) & (p < 1.0 - PROB_CLAMP)
    return nll, np.where(active, p - z, 0.0)


def batch_loss_and_grad(flat, spec, X, z, prior_precision, n_total):
    """Mean cross-entropy over the batch plus ``delta/2 * ||theta||^2 / n_total``."""
    layers, inputs, pre, out = _forward_cache(flat, spec, X)
    nll, dnll = bernoulli_nll(out, z)
    n = X.shape[0]
    loss = nll.mean() + 0.5 * prior_precision * flat @ flat / n_total
    grad = _backward(layers, inputs, pre, spec, dnll / n, per_sample=False)
    grad = grad + prior_precision * flat / n_total
    return float(loss), grad


def loss_and_grad(params: MlpParams, labeled, prior_precision: float) -> tuple:
    """Regularized cross-entropy on the full labeled set and its gradient."""
    if prior_precision < 0:
        raise ValueError("prior_precision must be nonnegative")
    if len(labeled) == 0:
        raise ValueError("labeled set is empty")
    X = _as_batch(params.spec, labeled.points)
    z = np.asarray(labeled.labels, dtype=float)
    return batch_loss_and_grad(params.flat, params.spec, X, z, prior_precision, X.shape[0])
