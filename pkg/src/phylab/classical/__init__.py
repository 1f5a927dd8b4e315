"""Non-learned baselines used as references and oracles."""

from .constellation import Constellation, bits_to_int, int_to_bits, make_constellation, qpsk
from .detection import ls_channel_estimate, zf_detect, zf_equalize
from .doa import DoaEstimate, angle_grid_deg, music_doa, music_spectrum
from .hamming import hamming74_decode, hamming74_encode
from .noma import (
    NomaConfig,
    SicResult,
    achievable_rate,
    noma_superpose,
    orthogonal_rate,
    sic_decode,
    sic_order,
)
from .precoding import (
    PrecoderPair,
    gmd_precoder,
    hybrid_decompose,
    hybrid_residual,
    normalize_power,
    qr_sic_receiver,
    svd_precoder,
    zf_receiver,
)

__all__ = [
    "Constellation",
    "DoaEstimate",
    "NomaConfig",
    "PrecoderPair",
    "SicResult",
    "achievable_rate",
    "angle_grid_deg",
    "bits_to_int",
    "gmd_precoder",
    "hamming74_decode",
    "hamming74_encode",
    "hybrid_decompose",
    "hybrid_residual",
    "int_to_bits",
    "ls_channel_estimate",
    "make_constellation",
    "music_doa",
    "music_spectrum",
    "noma_superpose",
    "normalize_power",
    "orthogonal_rate",
    "qpsk",
    "qr_sic_receiver",
    "sic_decode",
    "sic_order",
    "svd_precoder",
    "zf_detect",
    "zf_equalize",
    "zf_receiver",
]
