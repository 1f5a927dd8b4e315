"""Name -> pipeline table for the six experiments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .autoencoder import run_autoencoder_74
from .config import ExperimentConfig, ExperimentName
from .doa import generate_doa_dataset, run_doa_estimation
from .gain import generate_gain_dataset, run_gain_estimation
from .mmwave import generate_mmwave_dataset, run_mmwave_precoding
from .noma import run_noma_detection
from .ofdm import run_ofdm_receiver

__all__ = ["ExperimentEntry", "EXPERIMENTS", "run_experiment", "generate_dataset", "DatasetUnsupported"]


class DatasetUnsupported(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentEntry:
    name: ExperimentName
    description: str
    runner: Callable
    dataset: Callable | None = None


EXPERIMENTS = {
    e.name: e
    for e in (
        ExperimentEntry(
            ExperimentName.OFDM_RECEIVER,
            "OFDM BER: DNN detector vs LS+ZF with full pilots, reduced pilots and no cyclic prefix",
            run_ofdm_receiver,
        ),
        ExperimentEntry(
            ExperimentName.NOMA_DETECTION,
            "Two-user NOMA: DNN detector vs LS-CSI SIC, per-user BER and sum rate",
            run_noma_detection,
        ),
        ExperimentEntry(
            ExperimentName.AUTOENCODER_74,
            "(7,4) end-to-end autoencoder BLER vs Hamming(7,4) hard decision",
            run_autoencoder_74,
        ),
        ExperimentEntry(
            ExperimentName.DOA_ESTIMATION,
            "ULA direction of arrival: grid-classifier DNN vs MUSIC, MSE in deg^2",
            run_doa_estimation,
            generate_doa_dataset,
        ),
        ExperimentEntry(
            ExperimentName.GAIN_ESTIMATION,
            "Massive-MIMO path-gain estimation after MUSIC: DNN vs LS, MRC BER and NMSE",
            run_gain_estimation,
            generate_gain_dataset,
        ),
        ExperimentEntry(
            ExperimentName.MMWAVE_PRECODING,
            "mmWave SV channels: digital/hybrid SVD and GMD precoding and a DNN hybrid, BER",
            run_mmwave_precoding,
            generate_mmwave_dataset,
        ),
    )
}


def run_experiment(cfg: ExperimentConfig):
    """Run the pipeline for ``cfg.name``; returns a :class:`RunOutput`."""
    return EXPERIMENTS[cfg.name].runner(cfg)


def generate_dataset(cfg: ExperimentConfig):
    entry = EXPERIMENTS[cfg.name]
    if entry.dataset is None:
        raise DatasetUnsupported(
            f"{cfg.name.value} trains on freshly drawn batches and has no stored dataset"
        )
    return entry.dataset(cfg)
