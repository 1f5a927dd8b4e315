"""SGD with momentum and the mini-batch training loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .mlp import Grads, LossKind, Mlp, backward, forward, loss_and_grad

__all__ = [
    "TrainConfig",
    "Dataset",
    "TrainResult",
    "TrainingDiverged",
    "sgd_momentum_step",
    "zero_velocity",
    "train",
    "evaluate_loss",
]


class TrainingDiverged(RuntimeError):
    """Loss became NaN/inf; ``iteration`` is the 0-based offending batch."""

    def __init__(self, iteration: int, loss: float):
        super().__init__(f"non-finite loss {loss!r} at iteration {iteration}")
        self.iteration = iteration
        self.loss = loss


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    momentum: float = 0.85
    weight_decay: float = 1e-4
    batch_size: int = 64
    num_iterations: int = 1000
    loss: LossKind = LossKind.MSE
    seed: int = 0
    val_interval: int = 100
    # Range of per-example noise-layer SNR in dB (unit signal power).
    noise_snr_db: tuple = (0.0, 20.0)

    def __post_init__(self):
        object.__setattr__(self, "loss", LossKind(self.loss))
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must be in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.batch_size < 1 or self.num_iterations < 0 or self.val_interval < 1:
            raise ValueError("batch_size and val_interval must be >= 1, num_iterations >= 0")


@dataclass
class Dataset:
    """Feature/label matrices with disjoint split membership.

    ``splits`` maps a split name (``train``, ``validation``, ``test``) to
    row indices. Complex signals are stored as ``[real parts, imag parts]``.
    """

    features: np.ndarray
    labels: np.ndarray
    splits: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        self.labels = np.atleast_2d(np.asarray(self.labels, dtype=np.float64))
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("features and labels must have the same number of rows")
        if not self.splits:
            self.splits = {"train": np.arange(self.features.shape[0])}
        self.check_disjoint()

    def check_disjoint(self):
        seen: set = set()
        for name, idx in self.splits.items():
            s = set(np.asarray(idx).tolist())
            if seen & s:
                raise ValueError(f"split {name!r} overlaps another split")
            seen |= s

    def subset(self, split: str) -> tuple[np.ndarray, np.ndarray]:
        idx = self.splits[split]
        return self.features[idx], self.labels[idx]


@dataclass
class TrainResult:
    mlp: Mlp
    loss_history: np.ndarray
    validation_history: list


def zero_velocity(mlp: Mlp) -> list:
    return [np.zeros_like(p) for p in mlp.parameters()]


def sgd_momentum_step(mlp: Mlp, grads: Grads, velocity: list, cfg: TrainConfig) -> None:
    """In-place update ``v <- mu v - lr (g + wd w)``, ``w <- w + v``.

    Weight decay applies to weights only, not biases.
    """
    for j, (p, g) in enumerate(zip(mlp.parameters(), grads.parameters())):
        step = g + cfg.weight_decay * p if j % 2 == 0 else g
        velocity[j] *= cfg.momentum
        velocity[j] -= cfg.learning_rate * step
        p += velocity[j]


def evaluate_loss(mlp: Mlp, x, y, kind: LossKind) -> float:
    tr = forward(mlp, x)
    return loss_and_grad(tr, y, kind, mlp.spec.softmax_groups)[0]


def _snr_noise_sampler(lo: float, hi: float) -> Callable:
    def sample(rng: np.random.Generator, n: int) -> np.ndarray:
        snr = rng.uniform(lo, hi, n)
        return 10.0 ** (-snr / 20.0)

    return sample


def train(
    mlp: Mlp,
    dataset: Dataset | None,
    cfg: TrainConfig,
    *,
    batch_fn: Callable | None = None,
    noise_std_fn: Callable | None = None,
) -> TrainResult:
    """Mini-batch SGD with momentum; returns a trained copy of ``mlp``.

    Batches come from a seeded reshuffle of the ``train`` split each
    epoch, or from ``batch_fn(rng, batch_size) -> (x, y)`` for on-the-fly
    data. When the network has a noise layer without a fixed level, each
    example gets ``noise_std_fn(rng, n)`` (default: SNR uniform over
    ``cfg.noise_snr_db``, unit signal power).

    Raises
    ------
    TrainingDiverged
        As soon as a batch loss is not finite.
    """
    net = mlp.copy()
    rng = np.random.default_rng(cfg.seed)
    velocity = zero_velocity(net)
    groups = net.spec.softmax_groups
    noise = net.spec.noise_layer
    if noise is not None and noise.std is None and noise_std_fn is None:
        noise_std_fn = _snr_noise_sampler(*cfg.noise_snr_db)

    if batch_fn is None:
        if dataset is None:
            raise ValueError("either a dataset or a batch_fn is required")
        x_tr, y_tr = dataset.subset("train")
        n_train = x_tr.shape[0]
        bsz = min(cfg.batch_size, n_train)
        has_val = "validation" in dataset.splits and len(dataset.splits["validation"]) > 0
        x_val, y_val = dataset.subset("validation") if has_val else (None, None)
    else:
        has_val = False

    losses = np.empty(cfg.num_iterations)
    val_hist: list = []
    order = np.empty(0, dtype=np.int64)
    cursor = 0
    for it in range(cfg.num_iterations):
        if batch_fn is not None:
            xb, yb = batch_fn(rng, cfg.batch_size)
        else:
            if cursor + bsz > order.size:
                order = rng.permutation(n_train)
                cursor = 0
            idx = order[cursor:cursor + bsz]
            cursor += bsz
            xb, yb = x_tr[idx], y_tr[idx]
        std = None
        if noise is not None:
            std = noise.std if noise.std is not None else noise_std_fn(rng, xb.shape[0])
        # Overflow is expected on divergence and reported below.
        with np.errstate(over="ignore", invalid="ignore"):
            tr = forward(net, xb, rng=rng if noise is not None else None, noise_std=std)
            loss, d_out = loss_and_grad(tr, yb, cfg.loss, groups)
        if not math.isfinite(loss):
            raise TrainingDiverged(it, loss)
        losses[it] = loss
        sgd_momentum_step(net, backward(net, tr, d_out, cfg.loss), velocity, cfg)
        if has_val and ((it + 1) % cfg.val_interval == 0 or it + 1 == cfg.num_iterations):
            val_hist.append((it + 1, evaluate_loss(net, x_val, y_val, cfg.loss)))
    return TrainResult(mlp=net, loss_history=losses, validation_history=val_hist)
