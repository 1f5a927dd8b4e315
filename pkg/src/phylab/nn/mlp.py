"""Dense network definition, Xavier init, forward and backward passes.

Activations are row-major: a batch is an array of shape (B, features) and
layer ``i`` computes ``act_i(x @ W_i + b_i)`` with ``W_i`` of shape
(fan_in, fan_out).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "Activation",
    "LossKind",
    "NoiseLayer",
    "MlpSpec",
    "Mlp",
    "Trace",
    "Grads",
    "init_xavier",
    "forward",
    "loss_and_grad",
    "backward",
    "softmax",
]


class Activation(str, Enum):
    RELU = "relu"
    LINEAR = "linear"
    SOFTMAX = "softmax"
    TANH = "tanh"


class LossKind(str, Enum):
    MSE = "mse"
    SOFTMAX_CE = "softmax_ce"


@dataclass(frozen=True)
class NoiseLayer:
    """Additive Gaussian noise on the output of layer ``position``.

    ``std`` fixes the noise level; ``None`` means the caller supplies a
    per-example standard deviation at each forward pass.
    """

    position: int
    std: float | None = None


@dataclass(frozen=True)
class MlpSpec:
    """Architecture of a dense network.

    Parameters
    ----------
    layer_sizes
        Widths from input to output, at least two entries.
    activations
        One per affine layer (``len(layer_sizes) - 1``). Softmax is only
        allowed on the output layer.
    noise_layer
        Optional channel-noise injection between two hidden layers.
    normalize_after
        Optional layer index whose output rows are rescaled to squared
        norm equal to their width (average energy 1 per entry). Used for
        autoencoder transmitters.
    softmax_groups
        Number of equal contiguous output blocks that each get their own
        softmax. 1 is an ordinary softmax.
    """

    layer_sizes: tuple
    activations: tuple
    noise_layer: NoiseLayer | None = None
    normalize_after: int | None = None
    softmax_groups: int = 1

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        acts = tuple(Activation(a) for a in self.activations)
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "activations", acts)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError(f"need >= 2 positive layer sizes, got {sizes}")
        if len(acts) != len(sizes) - 1:
            raise ValueError(f"{len(sizes) - 1} activations expected, got {len(acts)}")
        if Activation.SOFTMAX in acts[:-1]:
            raise ValueError("softmax is only allowed at the output layer")
        if acts[-1] is Activation.SOFTMAX and sizes[-1] % self.softmax_groups:
            raise ValueError("output width must be a multiple of softmax_groups")
        n_layers = len(acts)
        if self.noise_layer is not None and not 0 <= self.noise_layer.position < n_layers - 1:
            raise ValueError("noise layer must sit between two layers (not after the output)")
        if self.normalize_after is not None and not 0 <= self.normalize_after < n_layers - 1:
            raise ValueError("normalize_after must index a hidden layer")

    @property
    def num_layers(self) -> int:
        return len(self.activations)

    def to_dict(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "activations": [a.value for a in self.activations],
            "noise_layer": None
            if self.noise_layer is None
            else {"position": self.noise_layer.position, "std": self.noise_layer.std},
            "normalize_after": self.normalize_after,
            "softmax_groups": self.softmax_groups,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpSpec":
        noise = d.get("noise_layer")
        return cls(
            layer_sizes=tuple(d["layer_sizes"]),
            activations=tuple(d["activations"]),
            noise_layer=None if noise is None else NoiseLayer(int(noise["position"]), noise["std"]),
            normalize_after=d.get("normalize_after"),
            softmax_groups=int(d.get("softmax_groups", 1)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class Mlp:
    spec: MlpSpec
    weights: list
    biases: list

    def __post_init__(self):
        sizes = self.spec.layer_sizes
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[i], sizes[i + 1]) or b.shape != (sizes[i + 1],):
                raise ValueError(f"layer {i} parameter shapes do not match the MlpSpec")
        if len(self.weights) != self.spec.num_layers or len(self.biases) != self.spec.num_layers:
            raise ValueError("parameter count does not match the MlpSpec")

    def copy(self) -> "Mlp":
        return Mlp(self.spec, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def parameters(self) -> list:
        """Weights and biases interleaved: ``[W0, b0, W1, b1, ...]``."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def predict(self, x) -> np.ndarray:
        """Evaluation-mode output (noise layer off)."""
        return forward(self, x).output

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.parameters())


def init_xavier(spec: MlpSpec, seed) -> Mlp:
    """Uniform Xavier/Glorot weights on +-sqrt(6 / (fan_in + fan_out)), zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Mlp(spec, weights, biases)


def softmax(z: np.ndarray, groups: int = 1) -> np.ndarray:
    zg = z.reshape(z.shape[0], groups, -1)
    e = np.exp(zg - zg.max(axis=-1, keepdims=True))
    return (e / e.sum(axis=-1, keepdims=True)).reshape(z.shape)


def _activate(kind: Activation, z: np.ndarray, groups: int) -> np.ndarray:
    if kind is Activation.RELU:
        return np.maximum(z, 0.0)
    if kind is Activation.TANH:
        return np.tanh(z)
    if kind is Activation.SOFTMAX:
        return softmax(z, groups)
    return z


def _activation_grad(kind: Activation, z: np.ndarray, a: np.ndarray, g: np.ndarray, groups: int) -> np.ndarray:
    """Backprop ``g = dL/da`` through ``a = act(z)``."""
    if kind is Activation.RELU:
        return g * (z > 0)
    if kind is Activation.TANH:
        return g * (1.0 - a * a)
    if kind is Activation.SOFTMAX:
        ag = a.reshape(a.shape[0], groups, -1)
        gg = g.reshape(g.shape[0], groups, -1)
        return (ag * (gg - np.sum(ag * gg, axis=-1, keepdims=True))).reshape(g.shape)
    return g


@dataclass
class Trace:
    """Everything the backward pass needs from one forward pass.

    ``inputs[i]`` feeds layer ``i``; ``pre[i]`` is its affine output and
    ``post[i]`` its activation (before any normalization/noise applied on
    the way to layer ``i + 1``). ``norms`` caches row norms of the
    normalized layer.
    """

    inputs: list = field(default_factory=list)
    pre: list = field(default_factory=list)
    post: list = field(default_factory=list)
    norms: np.ndarray | None = None

    @property
    def output(self) -> np.ndarray:
        return self.post[-1]

    @property
    def logits(self) -> np.ndarray:
        return self.pre[-1]


def forward(mlp: Mlp, x, rng: np.random.Generator | None = None, noise_std=None) -> Trace:
    """Run the network on a batch.

    Channel noise is injected at the noise layer only when ``rng`` is
    given. Its standard deviation is ``noise_std`` (scalar or one value per
    row) if provided, else the layer's fixed ``std``.
    """
    spec = mlp.spec
    h = np.atleast_2d(np.asarray(x, dtype=np.float64))
    tr = Trace()
    for i, (w, b, act) in enumerate(zip(mlp.weights, mlp.biases, spec.activations)):
        tr.inputs.append(h)
        z = h @ w + b
        a = _activate(act, z, spec.softmax_groups)
        tr.pre.append(z)
        tr.post.append(a)
        h = a
        if spec.normalize_after == i:
            norms = np.linalg.norm(h, axis=1, keepdims=True)
            norms = np.maximum(norms, 1e-300)
            tr.norms = norms
            h = np.sqrt(h.shape[1]) * h / norms
        if spec.noise_layer is not None and spec.noise_layer.position == i and rng is not None:
            std = spec.noise_layer.std if noise_std is None else noise_std
            if std is None:
                raise ValueError("noise layer has no fixed std; pass noise_std")
            std = np.asarray(std, dtype=float)
            if std.ndim == 1:
                std = std[:, None]
            h = h + std * rng.standard_normal(h.shape)
    return tr


def loss_and_grad(trace: Trace, target, kind: LossKind, groups: int = 1) -> tuple[float, np.ndarray]:
    """Loss value and the gradient that seeds :func:`backward`.

    ``MSE`` is ``mean_b ||out_b - t_b||^2`` (squared error summed over
    outputs, averaged over the batch); its gradient is taken on the network
    output. ``SOFTMAX_CE`` is the batch mean of the cross-entropy summed
    over softmax groups, evaluated from the logits with a log-sum-exp; its
    gradient ``(p - t) / B`` is taken on the logits.
    """
    t = np.atleast_2d(np.asarray(target, dtype=np.float64))
    z = trace.logits
    bsz = z.shape[0]
    if t.shape != z.shape:
        raise ValueError(f"target shape {t.shape} does not match output {z.shape}")
    kind = LossKind(kind)
    if kind is LossKind.MSE:
        out = trace.output
        diff = out - t
        loss = float(np.sum(diff * diff) / bsz)
        d_out = 2.0 * diff / bsz
        return loss, d_out
    zg = z.reshape(bsz, groups, -1)
    m = zg.max(axis=-1, keepdims=True)
    lse = m + np.log(np.sum(np.exp(zg - m), axis=-1, keepdims=True))
    logp = zg - lse
    tg = t.reshape(zg.shape)
    loss = float(-np.sum(tg * logp) / bsz)
    p = np.exp(logp)
    return loss, ((p - tg) / bsz).reshape(z.shape)


@dataclass
class Grads:
    d_weights: list
    d_biases: list

    def parameters(self) -> list:
        out = []
        for w, b in zip(self.d_weights, self.d_biases):
            out.extend((w, b))
        return out


def backward(mlp: Mlp, trace: Trace, d_out, kind: LossKind = LossKind.MSE) -> Grads:
    """Exact gradients of the forward chain.

    ``d_out`` is what :func:`loss_and_grad` returned for ``kind``: a
    gradient on the network output for MSE, on the logits for softmax
    cross-entropy. Noise is additive, so its gradient passes straight
    through.
    """
    spec = mlp.spec
    n = spec.num_layers
    kind = LossKind(kind)
    g = np.asarray(d_out, dtype=np.float64)
    if kind is LossKind.SOFTMAX_CE:
        if spec.activations[-1] is not Activation.SOFTMAX:
            raise ValueError("softmax cross-entropy needs a softmax output layer")
        dz = g
    else:
        dz = _activation_grad(spec.activations[-1], trace.pre[-1], trace.post[-1], g, spec.softmax_groups)
    d_w = [None] * n
    d_b = [None] * n
    for i in range(n - 1, -1, -1):
        d_w[i] = trace.inputs[i].T @ dz
        d_b[i] = dz.sum(axis=0)
        if i == 0:
            break
        dh = dz @ mlp.weights[i].T
        if spec.normalize_after == i - 1:
            a = trace.post[i - 1]
            nrm = trace.norms
            u = a / nrm
            dh = np.sqrt(a.shape[1]) / nrm * (dh - u * np.sum(u * dh, axis=1, keepdims=True))
        dz = _activation_grad(spec.activations[i - 1], trace.pre[i - 1], trace.post[i - 1], dh, spec.softmax_groups)
    return Grads(d_w, d_b)
