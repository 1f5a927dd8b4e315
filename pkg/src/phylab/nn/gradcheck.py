"""Central finite-difference verification of the analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mlp import Activation, LossKind, Mlp, MlpSpec, backward, forward, init_xavier, loss_and_grad

__all__ = ["GradcheckReport", "gradient_check", "relative_error", "standard_cases", "run_suite"]

STEP = 1e-5
FLOOR = 1e-8


def relative_error(analytic, numeric) -> np.ndarray:
    a = np.asarray(analytic, dtype=float)
    n = np.asarray(numeric, dtype=float)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), FLOOR)


def _loss(mlp: Mlp, x, y, kind: LossKind) -> float:
    return loss_and_grad(forward(mlp, x), y, kind, mlp.spec.softmax_groups)[0]


@dataclass
class GradcheckReport:
    per_layer: list
    max_error: float

    def passed(self, tol: float = 1e-6) -> bool:
        return self.max_error <= tol


def gradient_check(mlp: Mlp, sample, loss_kind: LossKind, backward_fn=backward) -> GradcheckReport:
    """Compare ``backward_fn`` against central differences on every parameter.

    ``sample`` is an ``(x, y)`` batch. The noise layer is off (no rng), so
    the loss is deterministic. ``per_layer`` holds the max relative error
    of each layer's weights and biases.
    """
    x, y = sample
    loss_kind = LossKind(loss_kind)
    tr = forward(mlp, x)
    _, d_out = loss_and_grad(tr, y, loss_kind, mlp.spec.softmax_groups)
    grads = backward_fn(mlp, tr, d_out, loss_kind).parameters()
    probe = mlp.copy()
    errs = []
    for p, g in zip(probe.parameters(), grads):
        num = np.empty_like(p)
        flat, nflat = p.reshape(-1), num.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + STEP
            up = _loss(probe, x, y, loss_kind)
            flat[j] = orig - STEP
            down = _loss(probe, x, y, loss_kind)
            flat[j] = orig
            nflat[j] = (up - down) / (2 * STEP)
        errs.append(float(np.max(relative_error(g, num))))
    per_layer = [(errs[2 * i], errs[2 * i + 1]) for i in range(len(errs) // 2)]
    return GradcheckReport(per_layer=per_layer, max_error=max(errs))


def standard_cases(seed: int = 7) -> list:
    """Seeded 3-4 layer nets covering every activation/loss pairing.

    Returns ``(name, mlp, (x, y), loss_kind)`` tuples.
    """
    rng = np.random.default_rng(seed)
    cases = []

    def add(name, sizes, acts, kind, **extra):
        spec = MlpSpec(tuple(sizes), tuple(acts), **extra)
        net = init_xavier(spec, int(rng.integers(2**31)))
        # Nonzero biases so ReLU kinks are not hit at exactly zero inputs.
        for b in net.biases:
            b[:] = rng.uniform(-0.1, 0.1, b.shape)
        x = rng.standard_normal((5, sizes[0]))
        if kind is LossKind.SOFTMAX_CE:
            groups = extra.get("softmax_groups", 1)
            width = sizes[-1] // groups
            cls = rng.integers(0, width, (5, groups))
            y = np.zeros((5, groups, width))
            np.put_along_axis(y, cls[..., None], 1.0, axis=-1)
            y = y.reshape(5, sizes[-1])
        else:
            y = rng.standard_normal((5, sizes[-1]))
        cases.append((name, net, (x, y), kind))

    R, T, L, S = Activation.RELU, Activation.TANH, Activation.LINEAR, Activation.SOFTMAX
    add("relu-linear-mse", (4, 6, 5, 3), (R, R, L), LossKind.MSE)
    add("tanh-linear-mse", (4, 6, 5, 3), (T, T, L), LossKind.MSE)
    add("mixed-tanh-out-mse", (3, 5, 4, 6, 2), (R, T, L, T), LossKind.MSE)
    add("relu-softmax-ce", (4, 7, 6, 5), (R, R, S), LossKind.SOFTMAX_CE)
    add("tanh-softmax-ce", (4, 6, 5, 4), (T, T, S), LossKind.SOFTMAX_CE)
    add("softmax-out-mse", (3, 6, 4), (T, S), LossKind.MSE)
    add("grouped-softmax-ce", (4, 8, 6, 6), (R, T, S), LossKind.SOFTMAX_CE, softmax_groups=3)
    add("normalized-encoder-ce", (6, 8, 4, 8, 6), (R, L, R, S), LossKind.SOFTMAX_CE, normalize_after=1)
    return cases


def run_suite(seed: int = 7, backward_fn=backward) -> list:
    """Run every standard case; returns ``(name, report)`` pairs."""
    return [(name, gradient_check(net, sample, kind, backward_fn)) for name, net, sample, kind in standard_cases(seed)]
