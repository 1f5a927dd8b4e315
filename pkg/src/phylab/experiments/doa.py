"""Uplink DOA estimation: grid-classifier DNN against MUSIC.

A unit signal from angle ``theta`` reaches an N-element ULA as
``y = a(theta) + n`` with per-antenna SNR ``1 / noise_var``. Training
angles come from a lattice with step ``sample_step_deg`` inside
``[-max_angle_deg, max_angle_deg]``; lattice points are
partitioned so train, validation and test angles never coincide. The DNN
classifies ``[Re y, Im y]`` into ``cell_step_deg`` cells and reports the
cell centre.
"""

from __future__ import annotations

import numpy as np

from ..channel import UlaConfig, steering_matrix
from ..classical import angle_grid_deg, music_doa
from ..nn import Activation, LossKind, Mlp, forward, train
from .common import RunOutput, build_mlp, complex_features, finish, new_result, one_hot, train_config
from .config import ExperimentConfig, ExperimentName, config_hash
from .datasets import GeneratedDataset, partition_lattice
from .results import Metric, mean_stderr, rng_for

__all__ = [
    "run_doa_estimation",
    "generate_doa_dataset",
    "cell_index",
    "cell_centers",
    "angle_lattice",
    "train_doa_dnn",
    "observe",
    "dnn_estimate_deg",
    "music_estimate_deg",
]


def cell_centers(step_deg: float, max_angle_deg: float = 90.0) -> np.ndarray:
    """Centres of the classifier cells tiling ``[-max_angle, max_angle]``."""
    n = int(round(2 * max_angle_deg / step_deg))
    return -max_angle_deg + step_deg * (np.arange(n) + 0.5)


def cell_index(theta_deg, step_deg: float, max_angle_deg: float = 90.0) -> np.ndarray:
    n = int(round(2 * max_angle_deg / step_deg))
    k = np.floor((np.asarray(theta_deg) + max_angle_deg) / step_deg).astype(np.int64)
    return np.clip(k, 0, n - 1)


def angle_lattice(params) -> np.ndarray:
    grid = angle_grid_deg(params.sample_step_deg)
    return grid[np.abs(grid) <= params.max_angle_deg + 1e-9]


def _ula(p) -> UlaConfig:
    return UlaConfig(p.num_antennas, p.element_spacing)


def observe(theta_deg, snr_db, rng: np.random.Generator, params, snapshots: int = 1) -> np.ndarray:
    """Received vectors, shape ``(len(theta), snapshots, N)``."""
    theta = np.atleast_1d(np.asarray(theta_deg, dtype=float))
    snr = np.broadcast_to(np.asarray(snr_db, dtype=float), theta.shape)
    a = steering_matrix(np.deg2rad(theta), _ula(params)).T  # (B, N)
    std = np.sqrt(10.0 ** (-snr / 10.0) / 2.0)[:, None, None]
    shape = (theta.size, snapshots, params.num_antennas)
    noise = std * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return a[:, None, :] + noise


def generate_doa_dataset(cfg: ExperimentConfig) -> GeneratedDataset:
    p = cfg.channel
    lattice = angle_lattice(p)
    sizes = {"train": p.train_size, "validation": p.val_size, "test": p.test_size}
    rng = rng_for(cfg.master_seed, "doa_dataset")
    groups = partition_lattice(lattice.size, sizes, rng)
    lo, hi = p.train_snr_db
    feats, labels, splits = [], [], {}
    start = 0
    for name in ("train", "validation", "test"):
        n = sizes[name]
        if n <= 0:
            splits[name] = np.arange(0)
            continue
        pts = groups[name]
        # Cycle through every lattice angle of the split before repeating.
        idx = np.concatenate([rng.permutation(pts) for _ in range(-(-n // pts.size))])[:n]
        theta = lattice[idx]
        y = observe(theta, rng.uniform(lo, hi, n), rng, p)[:, 0, :]
        feats.append(complex_features(y))
        labels.append(np.stack([theta, cell_index(theta, p.cell_step_deg, p.max_angle_deg)], axis=1))
        splits[name] = np.arange(start, start + n)
        start += n
    n_ant = p.num_antennas
    return GeneratedDataset(
        experiment=cfg.name.value,
        seed=cfg.master_seed,
        config_hash=config_hash(cfg),
        features=np.concatenate(feats),
        labels=np.concatenate(labels),
        splits=splits,
        feature_names=[f"re_y{i}" for i in range(n_ant)] + [f"im_y{i}" for i in range(n_ant)],
        label_names=["theta_deg", "cell"],
        audit={"lattice_step_deg": p.sample_step_deg, "lattice_points": {k: v.tolist() for k, v in groups.items()}},
    )


def dnn_estimate_deg(net: Mlp, y, params) -> np.ndarray:
    """Cell-centre estimates from single-snapshot observations ``(B, N)``."""
    cls = np.argmax(forward(net, complex_features(y)).output, axis=1)
    return cell_centers(params.cell_step_deg, params.max_angle_deg)[cls]


def music_estimate_deg(y, params, grid_step_deg: float) -> np.ndarray:
    """Single-source MUSIC on each ``(snapshots, N)`` block of ``y``."""
    ula = _ula(params)
    out = np.empty(y.shape[0])
    for i, block in enumerate(y):
        out[i] = music_doa(block.T, 1, ula, grid_step_deg).angles_deg[0]
    return out


def train_doa_dnn(cfg: ExperimentConfig, ds: GeneratedDataset) -> Mlp:
    p = cfg.channel
    n_cells = cell_centers(p.cell_step_deg, p.max_angle_deg).size
    training = ds.as_training_set()
    training.labels = one_hot(ds.labels[:, 1].astype(np.int64), n_cells)
    net = build_mlp(cfg, 2 * p.num_antennas, n_cells, Activation.SOFTMAX, "doa_dnn")
    return train(net, training, train_config(cfg, LossKind.SOFTMAX_CE, "doa_dnn")).mlp


def run_doa_estimation(cfg: ExperimentConfig) -> RunOutput:
    if cfg.name is not ExperimentName.DOA_ESTIMATION:
        raise ValueError(f"not a DOA config: {cfg.name.value}")
    p = cfg.channel
    res = new_result(cfg)
    out = RunOutput(res)
    ds = generate_doa_dataset(cfg)
    test_angles = ds.labels[ds.splits["test"], 0] if ds.splits["test"].size else ds.labels[:, 0]
    test_angles = np.unique(test_angles)
    if p.include_dnn:
        net = train_doa_dnn(cfg, ds)
        out.models["classifier"] = net
    for i, snr in enumerate(cfg.snr_grid_db):
        rng = rng_for(cfg.master_seed, "doa_eval", i)
        theta = rng.choice(test_angles, cfg.trials_per_point)
        y = observe(theta, snr, rng, p, snapshots=max(1, p.music_snapshots))
        if p.include_dnn:
            est = dnn_estimate_deg(net, y[:, 0, :], p)
            res.add("dnn", snr, Metric.MSE_DEG2, mean_stderr((est - theta) ** 2))
        est = music_estimate_deg(y, p, p.music_grid_step_deg)
        res.add("music", snr, Metric.MSE_DEG2, mean_stderr((est - theta) ** 2))
    return finish(out)

