"""OFDM receiver: a DNN detector against LS estimation with ZF equalization.

Each frame sends a pilot OFDM symbol and a data OFDM symbol through one
multipath realization, preceded by a random data symbol whose tail causes
inter-symbol interference when the cyclic prefix is too short. Pilot
subcarriers carry a fixed QPSK sequence; the other subcarriers of the pilot
symbol are empty. Noise variance per sample is ``10^(-snr/10)``, which is
the data-subcarrier SNR for a channel of unit average gain.

Three settings are compared: every subcarrier a pilot (``full_pilots``),
every ``reduced_pilot_spacing``-th subcarrier a pilot (``reduced_pilots``),
and full pilots with no cyclic prefix (``no_cp``). BER is counted on the
first ``dnn_subcarriers`` data subcarriers for every method.
"""

from __future__ import annotations

import numpy as np

from ..channel import OfdmConfig, apply_multipath, exponential_taps, ofdm_demodulate, ofdm_modulate
from ..classical import int_to_bits, ls_channel_estimate, make_constellation
from ..nn import Activation, LossKind, Mlp, forward, train
from .common import RunOutput, build_mlp, complex_features, finish, new_result, one_hot, train_config
from .config import ExperimentConfig, ExperimentName
from .results import Metric, mean_stderr, rng_for

__all__ = ["run_ofdm_receiver", "SCENARIOS", "scenario_config", "pilot_sequence", "OfdmFrames", "draw_frames"]

SCENARIOS = ("full_pilots", "reduced_pilots", "no_cp")


def scenario_config(p, scenario: str) -> OfdmConfig:
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown OFDM scenario {scenario!r}; choose from {SCENARIOS}")
    spacing = p.reduced_pilot_spacing if scenario == "reduced_pilots" else 1
    cp = 0 if scenario == "no_cp" else p.cp_length
    taps = p.num_taps if p.fading == "rayleigh" else 1
    return OfdmConfig(p.num_subcarriers, cp, taps, pilot_spacing=spacing, constellation=p.constellation)


def pilot_sequence(ocfg: OfdmConfig, boost_db: float, seed: int) -> np.ndarray:
    """Fixed QPSK pilots on ``ocfg.pilot_positions`` (seeded, known to every receiver)."""
    c = make_constellation(ocfg.constellation)
    labels = rng_for(seed, "ofdm_pilots").integers(0, len(c.points), ocfg.pilot_positions.size)
    return c.points[labels] * 10.0 ** (boost_db / 20.0)


class OfdmFrames:
    def __init__(self, labels, taps, y_pilot, y_data):
        self.labels = labels  # (F, S) data symbol labels
        self.taps = taps  # (F, taps)
        self.y_pilot = y_pilot  # (F, S) demodulated pilot symbol
        self.y_data = y_data  # (F, S) demodulated data symbol

    def true_response(self, num_subcarriers: int) -> np.ndarray:
        return np.fft.fft(self.taps, n=num_subcarriers, axis=1)


def draw_frames(rng, n_frames: int, p, ocfg: OfdmConfig, pilots, snr_db) -> OfdmFrames:
    c = make_constellation(ocfg.constellation)
    s, m = ocfg.num_subcarriers, len(c.points)
    snr = np.broadcast_to(np.asarray(snr_db, dtype=float), (n_frames,))
    if p.fading == "rayleigh":
        taps = exponential_taps(ocfg.num_taps, rng, p.tap_decay, size=n_frames)
    elif p.fading == "none":
        taps = np.ones((n_frames, 1), dtype=np.complex128)
    else:
        raise ValueError(f"unknown fading {p.fading!r}")
    prev = c.points[rng.integers(0, m, (n_frames, s))]
    labels = rng.integers(0, m, (n_frames, s))
    xp = np.zeros((n_frames, s), dtype=np.complex128)
    xp[:, ocfg.pilot_positions] = pilots
    tx = np.concatenate([ofdm_modulate(prev, ocfg), ofdm_modulate(xp, ocfg), ofdm_modulate(c.points[labels], ocfg)], axis=1)
    rx = apply_multipath(tx, taps)
    std = np.sqrt(10.0 ** (-snr / 10.0) / 2.0)[:, None]
    rx = rx + std * (rng.standard_normal(rx.shape) + 1j * rng.standard_normal(rx.shape))
    n = ocfg.symbol_length
    return OfdmFrames(labels, taps, ofdm_demodulate(rx[:, n:2 * n], ocfg), ofdm_demodulate(rx[:, 2 * n:], ocfg))


def _features(frames: OfdmFrames) -> np.ndarray:
    return complex_features(np.concatenate([frames.y_pilot, frames.y_data], axis=1))


def _ber(frames: OfdmFrames, est_labels, d: int, bps: int) -> np.ndarray:
    t = int_to_bits(frames.labels[:, :d].reshape(-1), bps)
    e = int_to_bits(np.asarray(est_labels)[:, :d].reshape(-1), bps)
    return np.mean((t != e).reshape(frames.labels.shape[0], -1), axis=1)


def _zf_labels(h, y, c) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        z = y / h
    z = np.where(np.isfinite(z), z, 0.0)
    return c.slice_indices(z)


def train_ofdm_dnn(cfg: ExperimentConfig, scenario: str, pilots) -> Mlp:
    p = cfg.channel
    ocfg = scenario_config(p, scenario)
    c = make_constellation(p.constellation)
    m, d, s = len(c.points), p.dnn_subcarriers, p.num_subcarriers
    lo, hi = p.train_snr_db

    def batch(rng, size):
        fr = draw_frames(rng, size, p, ocfg, pilots, rng.uniform(lo, hi, size))
        return _features(fr), one_hot(fr.labels[:, :d], m).reshape(size, d * m)

    net = build_mlp(cfg, 4 * s, d * m, Activation.SOFTMAX, f"ofdm_dnn_{scenario}", softmax_groups=d)
    return train(net, None, train_config(cfg, LossKind.SOFTMAX_CE, f"ofdm_dnn_{scenario}"), batch_fn=batch).mlp


def run_ofdm_receiver(cfg: ExperimentConfig) -> RunOutput:
    if cfg.name is not ExperimentName.OFDM_RECEIVER:
        raise ValueError(f"not an OFDM config: {cfg.name.value}")
    p = cfg.channel
    if not 1 <= p.dnn_subcarriers <= p.num_subcarriers:
        raise ValueError("dnn_subcarriers must be in 1..num_subcarriers")
    c = make_constellation(p.constellation)
    m, d, bps = len(c.points), p.dnn_subcarriers, c.bits_per_symbol
    res = new_result(cfg)
    out = RunOutput(res)
    for scenario in p.scenarios:
        ocfg = scenario_config(p, scenario)
        pilots = pilot_sequence(ocfg, p.pilot_boost_db, cfg.master_seed)
        if p.include_dnn:
            net = train_ofdm_dnn(cfg, scenario, pilots)
            out.models[f"detector_{scenario}"] = net
        for i, snr in enumerate(cfg.snr_grid_db):
            fr = draw_frames(rng_for(cfg.master_seed, "ofdm_eval", scenario, i), cfg.trials_per_point, p, ocfg, pilots, snr)
            h_ls = ls_channel_estimate(fr.y_pilot, ocfg.pilot_positions, pilots, ocfg)
            res.add(f"ls_zf_{scenario}", snr, Metric.BER, mean_stderr(_ber(fr, _zf_labels(h_ls, fr.y_data, c), d, bps)))
            h = fr.true_response(p.num_subcarriers)
            res.add(f"perfect_zf_{scenario}", snr, Metric.BER, mean_stderr(_ber(fr, _zf_labels(h, fr.y_data, c), d, bps)))
            if p.include_dnn:
                probs = forward(net, _features(fr)).output.reshape(-1, d, m)
                res.add(f"dnn_{scenario}", snr, Metric.BER, mean_stderr(_ber(fr, np.argmax(probs, axis=2), d, bps)))
    return finish(out)
