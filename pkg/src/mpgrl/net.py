"""Dense feed-forward networks with analytic backprop, Adam, and soft target updates.

Everything is plain float64 numpy so gradients can be checked against
finite differences exactly. Networks are small (two hidden layers), so
there is no need for a general autodiff graph.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class ActivationSpec:
    """Activation choices: rectifier hidden units, configurable output."""

    output: str = "identity"  # "identity" (critics) or "tanh" (bounded actor)
    output_scale: float = 1.0  # actor action bound; ignored for identity

    def apply_output(self, z: np.ndarray) -> np.ndarray:
        if self.output == "identity":
            return z
        if self.output == "tanh":
            return self.output_scale * np.tanh(z)
        raise ValueError(f"unknown output activation {self.output!r}")

    def output_deriv(self, z: np.ndarray) -> np.ndarray:
        if self.output == "identity":
            return np.ones_like(z)
        if self.output == "tanh":
            t = np.tanh(z)
            return self.output_scale * (1.0 - t * t)
        raise ValueError(f"unknown output activation {self.output!r}")


@dataclass
class MlpParams:
    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    adam_m_w: list[np.ndarray] = field(default_factory=list)
    adam_v_w: list[np.ndarray] = field(default_factory=list)
    adam_m_b: list[np.ndarray] = field(default_factory=list)
    adam_v_b: list[np.ndarray] = field(default_factory=list)
    adam_t: int = 0

    def copy(self) -> "MlpParams":
        return copy.deepcopy(self)


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def init_params(layer_sizes: list[int], seed) -> MlpParams:
    """Uniform +-1/sqrt(fan_in) weights, zero biases, zero Adam moments.

    `seed` may be an int or a numpy Generator; results are deterministic
    for a fixed seed.
    """
    if not layer_sizes or any(n <= 0 for n in layer_sizes):
        raise ValueError("layer_sizes must be nonempty positive integers")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParams(
        layer_sizes=list(layer_sizes),
        weights=weights,
        biases=biases,
        adam_m_w=[np.zeros_like(w) for w in weights],
        adam_v_w=[np.zeros_like(w) for w in weights],
        adam_m_b=[np.zeros_like(b) for b in biases],
        adam_v_b=[np.zeros_like(b) for b in biases],
    )


def _as_batch(x: np.ndarray, dim: int, what: str) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise ValueError(f"{what} has shape {x.shape}, expected (..., {dim})")
    return x, single


def _forward_cache(params: MlpParams, spec: ActivationSpec, x: np.ndarray):
    """Returns (output, per-layer pre-activations, per-layer inputs)."""
    pre, inputs = [], []
    h = x
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(h)
        z = h @ w.T + b
        pre.append(z)
        h = spec.apply_output(z) if k == last else np.maximum(z, 0.0)
    return h, pre, inputs


def forward(params: MlpParams, spec: ActivationSpec, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a vector or a (batch, in) matrix."""
    xb, single = _as_batch(x, params.layer_sizes[0], "input")
    out, _, _ = _forward_cache(params, spec, xb)
    return out[0] if single else out


def backward(
    params: MlpParams,
    spec: ActivationSpec,
    x: np.ndarray,
    output_grad: np.ndarray,
) -> tuple[Gradients, np.ndarray]:
    """Backpropagate `output_grad` (dL/d output) through the network.

    Returns (gradients w.r.t. weights/biases, gradient w.r.t. the input).
    For batched inputs the parameter gradients are summed over rows and
    the input gradient is returned per row, so a mean loss is obtained by
    pre-scaling output_grad with 1/N.
    """
    xb, single = _as_batch(x, params.layer_sizes[0], "input")
    gb, gsingle = _as_batch(output_grad, params.layer_sizes[-1], "output_grad")
    if single != gsingle or xb.shape[0] != gb.shape[0]:
        raise ValueError("input and output_grad batch shapes disagree")

    _, pre, inputs = _forward_cache(params, spec, xb)
    g = gb * spec.output_deriv(pre[-1])
    grad_w = [None] * len(params.weights)
    grad_b = [None] * len(params.biases)
    for k in range(len(params.weights) - 1, -1, -1):
        grad_w[k] = g.T @ inputs[k]
        grad_b[k] = g.sum(axis=0)
        g = g @ params.weights[k]
        if k > 0:
            g = g * (pre[k - 1] > 0.0)
    grads = Gradients(weights=grad_w, biases=grad_b)
    return grads, (g[0] if single else g)


def adam_step(params: MlpParams, grads: Gradients, learning_rate: float) -> MlpParams:
    """In-place bias-corrected Adam update; returns params for chaining."""
    if learning_rate <= 0:
        raise ValueError("learning_rate must be positive")
    for g in grads.weights + grads.biases:
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient; step rejected")
    params.adam_t += 1
    t = params.adam_t
    c1 = 1.0 - ADAM_BETA1**t
    c2 = 1.0 - ADAM_BETA2**t
    for p, g, m, v in (
        list(zip(params.weights, grads.weights, params.adam_m_w, params.adam_v_w))
        + list(zip(params.biases, grads.biases, params.adam_m_b, params.adam_v_b))
    ):
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        p -= learning_rate * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)
    return params


def soft_update(main: MlpParams, target: MlpParams, tau: float) -> MlpParams:
    """target <- tau * main + (1 - tau) * target, elementwise. Main unchanged."""
    if main.layer_sizes != target.layer_sizes:
        raise ValueError("main/target layer sizes differ")
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must be in [0, 1]")
    for pm, pt in zip(main.weights + main.biases, target.weights + target.biases):
        pt *= 1.0 - tau
        pt += tau * pm
    return target


def save_params(params: MlpParams, path) -> None:
    """Checkpoint: one header line with layer sizes, then raw float64
    row-major weights followed by biases, layer by layer. Round-trips
    bit-exactly. Adam state is not persisted."""
    with open(path, "wb") as f:
        header = "mlp " + " ".join(str(n) for n in params.layer_sizes) + "\n"
        f.write(header.encode("ascii"))
        for w, b in zip(params.weights, params.biases):
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_params(path) -> MlpParams:
    with open(path, "rb") as f:
        header = f.readline().decode("ascii").split()
        if not header or header[0] != "mlp":
            raise ValueError(f"{path}: not a checkpoint file")
        sizes = [int(n) for n in header[1:]]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = np.frombuffer(f.read(8 * fan_out * fan_in), dtype="<f8")
            weights.append(w.reshape(fan_out, fan_in).copy())
            biases.append(np.frombuffer(f.read(8 * fan_out), dtype="<f8").copy())
    return MlpParams(
        layer_sizes=sizes,
        weights=weights,
        biases=biases,
        adam_m_w=[np.zeros_like(w) for w in weights],
        adam_v_w=[np.zeros_like(w) for w in weights],
        adam_m_b=[np.zeros_like(b) for b in biases],
        adam_v_b=[np.zeros_like(b) for b in biases],
    )
