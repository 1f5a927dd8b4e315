"""Two-user power-domain NOMA over block fading: SIC baselines, a DNN detector
and sum rates.

Both users' signals reach the receiver through the same block-fading gain
``g ~ CN(0, 1)``: ``y = g (sqrt(alpha) x1 + sqrt(1 - alpha) x2) + n`` with
unit total transmit power and noise variance ``10^(-snr/10)``. Each frame
starts with ``num_pilots`` unit pilots sent at ``csi_pilot_boost_db`` above
the data power; the least-squares gain estimate feeds the SIC baseline.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import exp1

from ..classical import NomaConfig, achievable_rate, bits_to_int, int_to_bits, make_constellation, sic_decode
from ..nn import Activation, LossKind, forward, train
from .common import RunOutput, build_mlp, complex_features, finish, new_result, one_hot, train_config
from .config import ExperimentConfig, ExperimentName
from .results import Metric, MetricValue, mean_stderr, rng_for

__all__ = ["run_noma_detection", "analytic_sum_rate", "NomaFrames", "draw_frames", "dnn_features"]


def analytic_sum_rate(snr_db) -> np.ndarray:
    """``E[log2(1 + rho |g|^2)]`` for ``g ~ CN(0, 1)``: ``e^(1/rho) E1(1/rho) / ln 2``."""
    rho = 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    return np.exp(1.0 / rho) * exp1(1.0 / rho) / math.log(2.0)


class NomaFrames:
    """A batch of frames: gains, user bits, data observations and pilots."""

    def __init__(self, gains, bits, y, y_pilot, pilot_amp):
        self.gains = gains  # (F,)
        self.bits = bits  # (2, F, T, bits_per_symbol)
        self.y = y  # (F, T)
        self.y_pilot = y_pilot  # (F, P)
        self.pilot_amp = pilot_amp  # (F,)

    def ls_gain(self) -> np.ndarray:
        return np.mean(self.y_pilot, axis=1) / self.pilot_amp


def draw_frames(rng, n_frames: int, params, snr_db, pilot_boost_db) -> NomaFrames:
    """``snr_db`` and ``pilot_boost_db`` are scalars or one value per frame."""
    cons = make_constellation(params.constellation)
    cfg = NomaConfig.from_alpha(params.alpha)
    t, bps = params.symbols_per_frame, cons.bits_per_symbol
    snr = np.broadcast_to(np.asarray(snr_db, dtype=float), (n_frames,))
    boost = np.broadcast_to(np.asarray(pilot_boost_db, dtype=float), (n_frames,))
    g = (rng.standard_normal(n_frames) + 1j * rng.standard_normal(n_frames)) / math.sqrt(2.0)
    bits = rng.integers(0, 2, (2, n_frames, t, bps), dtype=np.int8)
    x = np.stack([cons.modulate(b.reshape(-1)).reshape(n_frames, t) for b in bits])
    s = cfg.amplitudes[0] * x[0] + cfg.amplitudes[1] * x[1]
    nstd = np.sqrt(10.0 ** (-snr / 10.0) / 2.0)[:, None]
    y = g[:, None] * s + nstd * (rng.standard_normal((n_frames, t)) + 1j * rng.standard_normal((n_frames, t)))
    amp = np.sqrt(10.0 ** (boost / 10.0))
    p = params.num_pilots
    yp = (g * amp)[:, None] + nstd * (rng.standard_normal((n_frames, p)) + 1j * rng.standard_normal((n_frames, p)))
    return NomaFrames(g, bits, y, yp, amp)


def dnn_features(frames: NomaFrames) -> np.ndarray:
    """One row per data symbol: the observation and the frame's de-boosted pilots."""
    f, t = frames.y.shape
    pil = frames.y_pilot / frames.pilot_amp[:, None]
    pil = np.broadcast_to(pil[:, None, :], (f, t, pil.shape[1]))
    z = np.concatenate([frames.y[..., None], pil], axis=-1)
    return complex_features(z).reshape(f * t, -1)


def _joint_labels(bits) -> np.ndarray:
    # Joint class = user-1 symbol label * M + user-2 symbol label.
    bps = bits.shape[-1]
    return bits_to_int(bits[0].reshape(-1, bps)) * (1 << bps) + bits_to_int(bits[1].reshape(-1, bps))


def _sic_bits(frames: NomaFrames, params, gains_est) -> np.ndarray:
    cons = make_constellation(params.constellation)
    cfg = NomaConfig.from_alpha(params.alpha)
    f, t = frames.y.shape
    out = np.empty_like(frames.bits)
    for i in range(f):
        r = sic_decode(frames.y[i], gains_est[i], cfg, cons)
        for u in range(2):
            b = r.bits[u]
            out[u, i] = 0 if b is None else np.asarray(b).reshape(t, -1)
    return out


def _per_user_ber(truth, est) -> list:
    f = truth.shape[1]
    return [mean_stderr(np.mean((truth[u] != est[u]).reshape(f, -1), axis=1)) for u in range(2)]


def run_noma_detection(cfg: ExperimentConfig) -> RunOutput:
    if cfg.name is not ExperimentName.NOMA_DETECTION:
        raise ValueError(f"not a NOMA config: {cfg.name.value}")
    p = cfg.channel
    cons = make_constellation(p.constellation)
    ncfg = NomaConfig.from_alpha(p.alpha)
    if ncfg.num_users != 2:
        raise ValueError("alpha must leave two active users")
    bps = cons.bits_per_symbol
    n_cls = 1 << (2 * bps)
    res = new_result(cfg)
    out = RunOutput(res)
    boosts = tuple(p.csi_pilot_boost_db)

    if p.include_dnn:
        lo, hi = p.train_snr_db
        per_frame = p.symbols_per_frame

        def batch(rng, size):
            n_f = max(1, size // per_frame)
            fr = draw_frames(rng, n_f, p, rng.uniform(lo, hi, n_f), rng.choice(boosts, n_f))
            return dnn_features(fr), one_hot(_joint_labels(fr.bits), n_cls)

        net = build_mlp(cfg, 2 * (1 + p.num_pilots), n_cls, Activation.SOFTMAX, "noma_dnn")
        net = train(net, None, train_config(cfg, LossKind.SOFTMAX_CE, "noma_dnn"), batch_fn=batch).mlp
        out.models["detector"] = net
        labels = np.arange(n_cls)
        lut = np.stack([int_to_bits(labels >> bps, bps), int_to_bits(labels & ((1 << bps) - 1), bps)])

    powers = np.asarray(ncfg.powers)
    for i, snr in enumerate(cfg.snr_grid_db):
        noise_var = 10.0 ** (-snr / 10.0)
        for q in boosts:
            # Same seed for every CSI quality: common gains, data and noise.
            fr = draw_frames(rng_for(cfg.master_seed, "frames", i), cfg.trials_per_point, p, snr, q)
            tag = f"csi{q:g}dB"
            if q == boosts[0]:
                perfect = _sic_bits(fr, p, fr.gains)
                for u, mv in enumerate(_per_user_ber(fr.bits, perfect)):
                    res.add(f"sic_perfect_u{u + 1}", snr, Metric.BER, mv)
                g2 = np.stack([fr.gains, fr.gains], axis=-1)
                res.add("sum_rate_perfect", snr, Metric.RATE, mean_stderr(achievable_rate(g2, powers, noise_var).sum(-1)))
            g_ls = fr.ls_gain()
            ls = _sic_bits(fr, p, g_ls)
            for u, mv in enumerate(_per_user_ber(fr.bits, ls)):
                res.add(f"sic_ls_{tag}_u{u + 1}", snr, Metric.BER, mv)
            g2 = np.stack([fr.gains, fr.gains], axis=-1)
            gh = np.stack([g_ls, g_ls], axis=-1)
            rate = achievable_rate(g2, powers, noise_var, est_gains=gh).sum(-1)
            res.add(f"sum_rate_ls_{tag}", snr, Metric.RATE, mean_stderr(rate))
            if p.include_dnn:
                cls = np.argmax(forward(net, dnn_features(fr)).output, axis=1)
                est = lut[:, cls].reshape(fr.bits.shape)
                for u, mv in enumerate(_per_user_ber(fr.bits, est)):
                    res.add(f"dnn_{tag}_u{u + 1}", snr, Metric.BER, mv)
        res.add("sum_rate_analytic", snr, Metric.RATE, MetricValue(float(analytic_sum_rate(snr)), 0.0, 1))
    return finish(out)
