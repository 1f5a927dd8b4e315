"""Two-stage massive-MIMO uplink channel estimation: MUSIC angles, then a DNN
for the complex path gains.

The channel is ``h = sum_l g_l a(theta_l)`` with ``g_l ~ CN(0, 1/L)``. A
frame carries ``num_pilots`` unit pilots followed by ``symbols_per_frame``
data symbols, all received with per-antenna SNR ``10^(snr/10)``; angles are
uniform on (-60, 60) degrees. Stage one estimates the angles from the pilot
snapshots; stage two maps the pilot mean, de-rotated by each estimated
steering vector, to the path gains. The reconstructed channel drives a
maximum-ratio combiner.
"""

from __future__ import annotations

import math

import numpy as np

from ..channel import UlaConfig, steering_matrix
from ..classical import make_constellation, music_doa
from ..nn import Activation, Dataset, LossKind, Mlp, forward, train
from .common import RunOutput, build_mlp, complex_features, finish, new_result, train_config
from .config import ExperimentConfig, ExperimentName, config_hash
from .datasets import GeneratedDataset
from .results import Metric, mean_stderr, rng_for

__all__ = [
    "run_gain_estimation",
    "generate_gain_dataset",
    "GainFrames",
    "draw_frames",
    "estimate_angles",
    "gain_features",
    "ls_gains",
    "mrc_detect",
]


class GainFrames:
    def __init__(self, theta, gains, y_pilot, y_data, bits):
        self.theta = theta  # (F, L) radians, ascending per frame
        self.gains = gains  # (F, L)
        self.y_pilot = y_pilot  # (F, N, P)
        self.y_data = y_data  # (F, N, T)
        self.bits = bits  # (F, T, bits_per_symbol)


def _ula(p) -> UlaConfig:
    return UlaConfig(p.num_antennas, p.element_spacing)


def _cn(rng, shape, var=1.0):
    return math.sqrt(var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def channel_of(theta, gains, params) -> np.ndarray:
    """``(F, N)`` channels from per-frame angles and gains."""
    ula = _ula(params)
    return np.stack([steering_matrix(t, ula) @ g for t, g in zip(theta, gains)])


def draw_frames(rng, n_frames: int, params, snr_db) -> GainFrames:
    n, l_paths = params.num_antennas, params.num_paths
    cons = make_constellation(params.constellation)
    snr = np.broadcast_to(np.asarray(snr_db, dtype=float), (n_frames,))
    theta = np.sort(rng.uniform(-math.pi / 3, math.pi / 3, (n_frames, l_paths)), axis=1)
    g = _cn(rng, (n_frames, l_paths), 1.0 / l_paths)
    h = channel_of(theta, g, params)
    var = (10.0 ** (-snr / 10.0))[:, None, None]
    yp = h[:, :, None] + np.sqrt(var) * _cn(rng, (n_frames, n, params.num_pilots))
    t, bps = params.symbols_per_frame, cons.bits_per_symbol
    bits = rng.integers(0, 2, (n_frames, t, bps), dtype=np.int8)
    x = cons.modulate(bits.reshape(-1)).reshape(n_frames, t)
    yd = h[:, :, None] * x[:, None, :] + np.sqrt(var) * _cn(rng, (n_frames, n, t))
    return GainFrames(theta, g, yp, yd, bits)


def estimate_angles(frames: GainFrames, params) -> np.ndarray:
    """MUSIC angles (radians, ascending) from each frame's pilot snapshots.

    A spectrum with too few peaks repeats its strongest estimate.
    """
    ula = _ula(params)
    l_paths = params.num_paths
    out = np.empty((frames.y_pilot.shape[0], l_paths))
    for i, yp in enumerate(frames.y_pilot):
        est = music_doa(yp, l_paths, ula, params.music_grid_step_deg).angles_deg
        est = (est + est[:1] * l_paths)[:l_paths]
        out[i] = np.deg2rad(np.sort(est))
    return out


def gain_features(frames: GainFrames, theta_hat, params) -> np.ndarray:
    """Pilot mean de-rotated by each ``a(theta_hat_l)``: ``2 N L`` reals per frame."""
    ula = _ula(params)
    ybar = frames.y_pilot.mean(axis=2)
    rows = []
    for yb, th in zip(ybar, theta_hat):
        a = steering_matrix(th, ula)  # (N, L)
        rows.append((a.conj() * yb[:, None]).T.reshape(-1))
    return complex_features(np.asarray(rows))


def ls_gains(frames: GainFrames, theta_hat, params) -> np.ndarray:
    ula = _ula(params)
    ybar = frames.y_pilot.mean(axis=2)
    return np.stack([np.linalg.pinv(steering_matrix(th, ula)) @ yb for yb, th in zip(ybar, theta_hat)])


def _gain_targets(gains) -> np.ndarray:
    return complex_features(gains)


def _gains_from_output(out, l_paths: int) -> np.ndarray:
    return out[:, :l_paths] + 1j * out[:, l_paths:]


def mrc_detect(h_hat, y_data, cons) -> np.ndarray:
    """Bits after maximum-ratio combining with ``h_hat``; shape ``(F, T, bps)``."""
    num = np.einsum("fn,fnt->ft", h_hat.conj(), y_data)
    z = num / np.maximum(np.sum(np.abs(h_hat) ** 2, axis=1), np.finfo(float).tiny)[:, None]
    f, t = z.shape
    return cons.demodulate(z.reshape(-1)).reshape(f, t, -1)


def generate_gain_dataset(cfg: ExperimentConfig) -> GeneratedDataset:
    p = cfg.channel
    rng = rng_for(cfg.master_seed, "gain_dataset")
    n = p.train_size + p.val_size
    lo, hi = p.train_snr_db
    fr = draw_frames(rng, n, p, rng.uniform(lo, hi, n))
    theta_hat = estimate_angles(fr, p)
    feats = gain_features(fr, theta_hat, p)
    labels = _gain_targets(fr.gains)
    nf = feats.shape[1] // 2
    return GeneratedDataset(
        experiment=cfg.name.value,
        seed=cfg.master_seed,
        config_hash=config_hash(cfg),
        features=feats,
        labels=labels,
        splits={"train": np.arange(p.train_size), "validation": np.arange(p.train_size, n)},
        feature_names=[f"re_z{i}" for i in range(nf)] + [f"im_z{i}" for i in range(nf)],
        label_names=[f"re_g{i}" for i in range(p.num_paths)] + [f"im_g{i}" for i in range(p.num_paths)],
    )


def train_gain_dnn(cfg: ExperimentConfig, ds: GeneratedDataset) -> Mlp:
    p = cfg.channel
    net = build_mlp(cfg, ds.features.shape[1], 2 * p.num_paths, Activation.LINEAR, "gain_dnn")
    training = Dataset(ds.features, ds.labels, ds.splits)
    return train(net, training, train_config(cfg, LossKind.MSE, "gain_dnn")).mlp


def _nmse(h_hat, h) -> np.ndarray:
    # Per-frame squared error over the mean channel energy E||h||^2 = N, so
    # that deep fades do not blow up single trials.
    return np.sum(np.abs(h_hat - h) ** 2, axis=1) / h.shape[1]


def _ber(bits, est) -> np.ndarray:
    return np.mean((bits != est).reshape(bits.shape[0], -1), axis=1)


def run_gain_estimation(cfg: ExperimentConfig) -> RunOutput:
    if cfg.name is not ExperimentName.GAIN_ESTIMATION:
        raise ValueError(f"not a gain-estimation config: {cfg.name.value}")
    p = cfg.channel
    cons = make_constellation(p.constellation)
    res = new_result(cfg)
    out = RunOutput(res)
    if p.include_dnn:
        net = train_gain_dnn(cfg, generate_gain_dataset(cfg))
        out.models["gain_regressor"] = net
    ula = _ula(p)
    for i, snr in enumerate(cfg.snr_grid_db):
        fr = draw_frames(rng_for(cfg.master_seed, "gain_eval", i), cfg.trials_per_point, p, snr)
        h = channel_of(fr.theta, fr.gains, p)
        theta_hat = estimate_angles(fr, p)
        a_hat = [steering_matrix(th, ula) for th in theta_hat]
        estimates = {"ls": ls_gains(fr, theta_hat, p)}
        if p.include_dnn:
            pred = forward(net, gain_features(fr, theta_hat, p)).output
            estimates["dnn"] = _gains_from_output(pred, p.num_paths)
        for method, g_hat in estimates.items():
            h_hat = np.stack([a @ g for a, g in zip(a_hat, g_hat)])
            res.add(method, snr, Metric.BER, mean_stderr(_ber(fr.bits, mrc_detect(h_hat, fr.y_data, cons))))
            res.add(method, snr, Metric.NMSE, mean_stderr(_nmse(h_hat, h)))
        res.add("perfect", snr, Metric.BER, mean_stderr(_ber(fr.bits, mrc_detect(h, fr.y_data, cons))))
    return finish(out)
