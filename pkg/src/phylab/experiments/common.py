"""Helpers shared by the experiment pipelines."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from ..nn import Activation, LossKind, Mlp, MlpSpec, TrainConfig, init_xavier
from .config import ExperimentConfig, config_hash
from .results import SweepResult, rng_for

__all__ = [
    "RunOutput",
    "complex_features",
    "one_hot",
    "qfunc",
    "train_config",
    "build_mlp",
    "new_result",
    "seed_for",
]


@dataclass
class RunOutput:
    """A sweep plus any trained networks, keyed by a short role name."""

    result: SweepResult
    models: dict = field(default_factory=dict)


def complex_features(z) -> np.ndarray:
    """``(..., n)`` complex to ``(..., 2n)`` real as ``[real parts, imag parts]``."""
    z = np.asarray(z)
    return np.concatenate([z.real, z.imag], axis=-1)


def one_hot(labels, width: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros(labels.shape + (width,))
    np.put_along_axis(out, labels[..., None], 1.0, axis=-1)
    return out


def qfunc(x):
    """Gaussian tail probability ``Q(x)``."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def seed_for(cfg: ExperimentConfig, *keys) -> int:
    """Integer seed for a training loop, derived from the master seed."""
    return int(rng_for(cfg.master_seed, *keys).integers(2**63 - 1))


def train_config(cfg: ExperimentConfig, loss: LossKind, stream: str, **extra) -> TrainConfig:
    t = cfg.train
    return TrainConfig(
        learning_rate=t.learning_rate,
        momentum=t.momentum,
        weight_decay=t.weight_decay,
        batch_size=t.batch_size,
        num_iterations=t.num_iterations,
        val_interval=t.val_interval,
        loss=loss,
        seed=seed_for(cfg, stream, "train"),
        **extra,
    )


def build_mlp(cfg: ExperimentConfig, n_in: int, n_out: int, out_act: Activation, stream: str, **spec_extra) -> Mlp:
    hidden = tuple(cfg.network.hidden_sizes)
    act = Activation(cfg.network.activation)
    spec = MlpSpec(
        layer_sizes=(n_in,) + hidden + (n_out,),
        activations=(act,) * len(hidden) + (out_act,),
        **spec_extra,
    )
    return init_xavier(spec, seed_for(cfg, stream, "init"))


def new_result(cfg: ExperimentConfig) -> SweepResult:
    return SweepResult(
        experiment=cfg.name.value,
        seed=cfg.master_seed,
        config_hash=config_hash(cfg),
        extras={"started": time.perf_counter()},
    )


def finish(out: RunOutput) -> RunOutput:
    r = out.result
    r.wall_time_s = time.perf_counter() - r.extras.pop("started", time.perf_counter())
    r.check_unique()
    return out
