"""(n, k) = (7, 4) end-to-end autoencoder against Hamming(7,4) with BPSK."""

from __future__ import annotations

import numpy as np

from ..classical import hamming74_decode, hamming74_encode
from ..nn import Activation, LossKind, Mlp, MlpSpec, NoiseLayer, forward, init_xavier, train
from .common import RunOutput, finish, new_result, one_hot, qfunc, seed_for, train_config
from .config import ExperimentConfig, ExperimentName
from .results import Metric, MetricValue, chunks, mean_stderr, rng_for

__all__ = [
    "run_autoencoder_74",
    "build_autoencoder",
    "noise_std",
    "hamming_hard_bler",
    "hamming_analytic_bler",
    "autoencoder_bler",
]

CHUNK = 200_000


def noise_std(ebn0_db, k: int = 4, n: int = 7):
    """Per-dimension noise std for unit-energy real channel uses at rate k/n."""
    ebn0 = 10.0 ** (np.asarray(ebn0_db, dtype=float) / 10.0)
    return np.sqrt(1.0 / (2.0 * (k / n) * ebn0))


def hamming_analytic_bler(ebn0_db) -> np.ndarray:
    """Hard-decision BLER: any pattern of two or more flips is a block error."""
    p = qfunc(np.sqrt(2.0 * (4 / 7) * 10.0 ** (np.asarray(ebn0_db, dtype=float) / 10.0)))
    return 1.0 - (1.0 - p) ** 7 - 7.0 * p * (1.0 - p) ** 6


def hamming_hard_bler(ebn0_db: float, blocks: int, rng: np.random.Generator):
    """Simulated BLER of Hamming(7,4) with BPSK (0 -> +1) and hard decisions."""
    sigma = float(noise_std(ebn0_db))
    errs = []
    for _, count in chunks(blocks, CHUNK):
        msg = rng.integers(0, 2, (count, 4), dtype=np.int8)
        code = hamming74_encode(msg.ravel()).reshape(count, 7)
        rx = 1.0 - 2.0 * code + sigma * rng.standard_normal((count, 7))
        hard = (rx < 0).astype(np.int8)
        dec = hamming74_decode(hard.ravel()).reshape(count, 4)
        errs.append(np.any(dec != msg, axis=1))
    return mean_stderr(np.concatenate(errs))


def build_autoencoder(hidden: tuple, seed, k: int = 4, n: int = 7) -> Mlp:
    """One-hot ``2^k`` -> hidden -> ``n`` (energy-normalized, noise) -> hidden -> softmax."""
    m = 2**k
    enc_h, dec_h = hidden[0], hidden[-1]
    spec = MlpSpec(
        layer_sizes=(m, enc_h, n, dec_h, m),
        activations=(Activation.RELU, Activation.LINEAR, Activation.RELU, Activation.SOFTMAX),
        noise_layer=NoiseLayer(position=1),
        normalize_after=1,
    )
    return init_xavier(spec, seed)


def autoencoder_bler(net: Mlp, ebn0_db: float, blocks: int, rng: np.random.Generator, k: int = 4, n: int = 7):
    m = 2**k
    sigma = float(noise_std(ebn0_db, k, n))
    errs = []
    for _, count in chunks(blocks, CHUNK):
        msg = rng.integers(0, m, count)
        out = forward(net, one_hot(msg, m), rng=rng, noise_std=sigma).output
        errs.append(np.argmax(out, axis=1) != msg)
    return mean_stderr(np.concatenate(errs))


def run_autoencoder_74(cfg: ExperimentConfig) -> RunOutput:
    if cfg.name is not ExperimentName.AUTOENCODER_74:
        raise ValueError(f"not an autoencoder config: {cfg.name.value}")
    p = cfg.channel
    if (p.k, p.n) != (4, 7):
        raise ValueError("only the (7, 4) code is compared against Hamming")
    res = new_result(cfg)
    out = RunOutput(res)

    if p.include_dnn:
        m = 2**p.k
        net = build_autoencoder(cfg.network.hidden_sizes, seed_for(cfg, "autoencoder", "init"), p.k, p.n)
        lo, hi = p.train_ebn0_db

        def batch(rng, size):
            msg = rng.integers(0, m, size)
            x = one_hot(msg, m)
            return x, x

        def noise(rng, size):
            return noise_std(rng.uniform(lo, hi, size), p.k, p.n)

        tcfg = train_config(cfg, LossKind.SOFTMAX_CE, "autoencoder")
        net = train(net, None, tcfg, batch_fn=batch, noise_std_fn=noise).mlp
        out.models["autoencoder"] = net

    for i, snr in enumerate(cfg.snr_grid_db):
        if p.include_dnn:
            mv = autoencoder_bler(net, snr, cfg.trials_per_point, rng_for(cfg.master_seed, "autoencoder", i), p.k, p.n)
            res.add("autoencoder", snr, Metric.BLER, mv)
        mv = hamming_hard_bler(snr, cfg.trials_per_point, rng_for(cfg.master_seed, "hamming_hard", i))
        res.add("hamming_hard", snr, Metric.BLER, mv)
        a = float(hamming_analytic_bler(snr))
        res.add("hamming_analytic", snr, Metric.BLER, MetricValue(a, 0.0, 1))
    return finish(out)

