"""mmWave precoding over Saleh-Valenzuela channels: fully digital SVD/GMD,
their hybrid splits and a DNN that predicts the analog phases.

``y = H F s + n`` with ``||F||_F^2 = Ns`` and unit-energy QPSK streams. The
SNR is referred to the mean channel energy, ``noise_var = Nt Nr /
10^(snr/10)``, so the array gain is not counted twice. SVD precoders use a
zero-forcing receiver; GMD precoders use QR successive cancellation. Every
SNR point reuses the same channel draws.
"""

from __future__ import annotations

import math

import numpy as np

from ..channel import SvChannelParams, sample_sv_channel
from ..classical import gmd_precoder, hybrid_decompose, qpsk, qr_sic_receiver, svd_precoder, zf_receiver
from ..nn import Activation, Dataset, LossKind, Mlp, forward, train
from .common import RunOutput, build_mlp, complex_features, finish, new_result, train_config
from .config import ExperimentConfig, ExperimentName, config_hash
from .datasets import GeneratedDataset
from .results import Metric, mean_stderr, rng_for

__all__ = [
    "run_mmwave_precoding",
    "generate_mmwave_dataset",
    "sv_params",
    "draw_channels",
    "digital_precoders",
    "hybrid_precoder",
    "phase_targets",
    "precoder_from_phases",
    "link_ber",
    "METHODS",
]

METHODS = ("svd_digital", "gmd_digital", "svd_hybrid", "gmd_hybrid", "dnn_hybrid")
_SIC = {"gmd_digital", "gmd_hybrid", "dnn_hybrid"}


def sv_params(p) -> SvChannelParams:
    return SvChannelParams(
        num_tx=p.num_tx,
        num_rx=p.num_rx,
        num_clusters=p.num_clusters,
        rays_per_cluster=p.rays_per_cluster,
        angle_spread_deg=p.angle_spread_deg,
        carrier_ghz=p.carrier_ghz,
    )


def draw_channels(rng, count: int, p) -> np.ndarray:
    sp = sv_params(p)
    return np.stack([sample_sv_channel(sp, rng).h for _ in range(count)])


def digital_precoders(h, n_s: int) -> dict:
    return {"svd_digital": svd_precoder(h, n_s).precoder, "gmd_digital": gmd_precoder(h, n_s).precoder}


def hybrid_precoder(f_opt, n_rf: int, iters: int) -> np.ndarray:
    f_rf, f_bb = hybrid_decompose(f_opt, n_rf, iters)
    return f_rf @ f_bb


def phase_targets(f_rf) -> np.ndarray:
    """``[cos, sin]`` of the analog phases relative to each column's first entry."""
    ph = np.angle(f_rf) - np.angle(f_rf[:1, :])
    return np.concatenate([np.cos(ph).T.reshape(-1), np.sin(ph).T.reshape(-1)])


def precoder_from_phases(out, f_opt, n_rf: int) -> np.ndarray:
    """Analog stage from predicted ``[cos, sin]``; digital stage by least squares."""
    nt, ns = f_opt.shape
    half = out.size // 2
    ph = np.arctan2(out[half:], out[:half]).reshape(n_rf, nt).T
    f_rf = np.exp(1j * ph) / math.sqrt(nt)
    f_bb = np.linalg.pinv(f_rf, rcond=1e-10) @ f_opt
    f = f_rf @ f_bb
    return f * math.sqrt(ns) / np.linalg.norm(f)


def channel_features(h) -> np.ndarray:
    h = np.asarray(h)
    return complex_features(h.reshape(h.shape[0], -1))


def generate_mmwave_dataset(cfg: ExperimentConfig) -> GeneratedDataset:
    """``(H -> analog phases of the hybrid split of the GMD precoder)`` pairs."""
    p = cfg.channel
    rng = rng_for(cfg.master_seed, "mmwave_dataset")
    hs = draw_channels(rng, p.train_samples, p)
    targets = []
    for h in hs:
        f_rf, _ = hybrid_decompose(gmd_precoder(h, p.num_streams).precoder, p.num_rf, p.hybrid_iters)
        targets.append(phase_targets(f_rf))
    n_val = max(1, p.train_samples // 10)
    n_tr = p.train_samples - n_val
    feats = channel_features(hs)
    k = feats.shape[1] // 2
    m = len(targets[0]) // 2
    return GeneratedDataset(
        experiment=cfg.name.value,
        seed=cfg.master_seed,
        config_hash=config_hash(cfg),
        features=feats,
        labels=np.asarray(targets),
        splits={"train": np.arange(n_tr), "validation": np.arange(n_tr, p.train_samples)},
        feature_names=[f"re_h{i}" for i in range(k)] + [f"im_h{i}" for i in range(k)],
        label_names=[f"cos_phi{i}" for i in range(m)] + [f"sin_phi{i}" for i in range(m)],
    )


def train_mmwave_dnn(cfg: ExperimentConfig, ds: GeneratedDataset) -> Mlp:
    net = build_mlp(cfg, ds.features.shape[1], ds.labels.shape[1], Activation.LINEAR, "mmwave_dnn")
    return train(net, Dataset(ds.features, ds.labels, ds.splits), train_config(cfg, LossKind.MSE, "mmwave_dnn")).mlp


def link_ber(h_eff, sic: bool, snr_db: float, num_symbols: int, rng, scale: float) -> np.ndarray:
    """Per-channel QPSK BER over a stack of effective channels ``(C, Nr, Ns)``."""
    c = qpsk()
    n_ch, nr, ns = h_eff.shape
    bits = rng.integers(0, 2, (n_ch, ns, num_symbols, 2), dtype=np.int8)
    s = c.modulate(bits.reshape(-1)).reshape(n_ch, ns, num_symbols)
    var = scale / 10.0 ** (snr_db / 10.0)
    shape = (n_ch, nr, num_symbols)
    noise = math.sqrt(var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    y = h_eff @ s + noise
    x_hat = qr_sic_receiver(h_eff, y, c.slice) if sic else zf_receiver(h_eff, y)
    est = c.demodulate(x_hat.reshape(-1)).reshape(bits.shape)
    return np.mean((est != bits).reshape(n_ch, -1), axis=1)


def run_mmwave_precoding(cfg: ExperimentConfig, methods=METHODS) -> RunOutput:
    if cfg.name is not ExperimentName.MMWAVE_PRECODING:
        raise ValueError(f"not an mmWave config: {cfg.name.value}")
    p = cfg.channel
    methods = [m for m in methods if m != "dnn_hybrid" or p.include_dnn]
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown precoding methods {sorted(unknown)}")
    res = new_result(cfg)
    out = RunOutput(res)
    if "dnn_hybrid" in methods:
        net = train_mmwave_dnn(cfg, generate_mmwave_dataset(cfg))
        out.models["phase_regressor"] = net

    hs = draw_channels(rng_for(cfg.master_seed, "mmwave_channels"), cfg.trials_per_point, p)
    effective = {m: [] for m in methods}
    for h in hs:
        dig = digital_precoders(h, p.num_streams)
        f = dict(dig)
        if "svd_hybrid" in methods:
            f["svd_hybrid"] = hybrid_precoder(dig["svd_digital"], p.num_rf, p.hybrid_iters)
        if "gmd_hybrid" in methods:
            f["gmd_hybrid"] = hybrid_precoder(dig["gmd_digital"], p.num_rf, p.hybrid_iters)
        if "dnn_hybrid" in methods:
            pred = forward(net, channel_features(h[None])).output[0]
            f["dnn_hybrid"] = precoder_from_phases(pred, dig["gmd_digital"], p.num_rf)
        for m in methods:
            effective[m].append(h @ f[m])
    effective = {m: np.stack(v) for m, v in effective.items()}

    scale = float(p.num_tx * p.num_rx)
    for i, snr in enumerate(cfg.snr_grid_db):
        for m in methods:
            # Same seed for every method: common symbols and noise.
            rng = rng_for(cfg.master_seed, "mmwave_eval", i)
            ber = link_ber(effective[m], m in _SIC, snr, p.symbols_per_channel, rng, scale)
            res.add(m, snr, Metric.BER, mean_stderr(ber))
    return finish(out)
