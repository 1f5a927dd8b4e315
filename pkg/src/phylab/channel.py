"""Stochastic channel models and signal-level propagation.

Angles are radians throughout this module. Every sampler takes an explicit
``numpy.random.Generator`` so a realization is a pure function of its
parameters and seed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "ChannelError",
    "UlaConfig",
    "SvChannelParams",
    "ChannelRealization",
    "ConstellationKind",
    "OfdmConfig",
    "steering_vector",
    "steering_matrix",
    "sample_uplink_channel",
    "sample_sv_channel",
    "ofdm_modulate",
    "ofdm_demodulate",
    "apply_multipath",
    "apply_awgn",
    "noise_variance",
    "exponential_taps",
]

log = logging.getLogger(__name__)

HALF_PI = math.pi / 2


class ChannelError(ValueError):
    """Invalid channel or waveform parameters."""


@dataclass(frozen=True)
class UlaConfig:
    num_antennas: int
    element_spacing_wavelengths: float = 0.5

    def __post_init__(self):
        if self.num_antennas < 2:
            raise ChannelError(f"ULA needs at least 2 antennas, got {self.num_antennas}")
        if not self.element_spacing_wavelengths > 0:
            raise ChannelError("element spacing must be positive")


@dataclass(frozen=True)
class SvChannelParams:
    """Clustered Saleh-Valenzuela channel between two ULAs."""

    num_tx: int
    num_rx: int
    num_clusters: int
    rays_per_cluster: int
    angle_spread_deg: float = 7.5
    carrier_ghz: float = 28.0
    element_spacing_wavelengths: float = 0.5

    def __post_init__(self):
        for name in ("num_tx", "num_rx", "num_clusters", "rays_per_cluster"):
            if getattr(self, name) < 1:
                raise ChannelError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.angle_spread_deg < 0:
            raise ChannelError("angle_spread_deg must be >= 0")

    @property
    def num_paths(self) -> int:
        return self.num_clusters * self.rays_per_cluster


@dataclass(frozen=True)
class ChannelRealization:
    """One drawn channel.

    ``paths`` holds ``(aoa_rad, aod_rad, complex_gain)`` per propagation
    path. Uplink SIMO channels have no departure angle and store ``0.0``.
    """

    h: np.ndarray
    paths: list = field(default_factory=list)

    def __post_init__(self):
        if not self.paths:
            raise ChannelError("a channel realization needs at least one path")


class ConstellationKind(str, Enum):
    BPSK = "BPSK"
    QPSK = "QPSK"
    QAM16 = "16QAM"


@dataclass(frozen=True)
class OfdmConfig:
    """OFDM numerology.

    ``cp_length < num_taps - 1`` is accepted so that the no-CP study can be
    run; :attr:`isi_free` reports whether the channel is diagonalized.
    """

    num_subcarriers: int
    cp_length: int
    num_taps: int
    pilot_spacing: int = 1
    constellation: ConstellationKind = ConstellationKind.QPSK

    def __post_init__(self):
        if self.num_subcarriers < 1 or self.cp_length < 0 or self.num_taps < 1:
            raise ChannelError("num_subcarriers, num_taps must be >= 1 and cp_length >= 0")
        if self.pilot_spacing < 1 or self.num_subcarriers % self.pilot_spacing:
            raise ChannelError(
                f"pilot_spacing={self.pilot_spacing} must divide num_subcarriers={self.num_subcarriers}"
            )
        object.__setattr__(self, "constellation", ConstellationKind(self.constellation))
        if not self.isi_free:
            log.warning(
                "cp_length=%d < num_taps-1=%d: inter-symbol interference is not removed",
                self.cp_length,
                self.num_taps - 1,
            )

    @property
    def isi_free(self) -> bool:
        return self.cp_length >= self.num_taps - 1

    @property
    def pilot_positions(self) -> np.ndarray:
        return np.arange(0, self.num_subcarriers, self.pilot_spacing)

    @property
    def symbol_length(self) -> int:
        return self.num_subcarriers + self.cp_length


def _array_phase(theta, num_antennas: int, spacing: float) -> np.ndarray:
    n = np.arange(num_antennas)
    return np.exp(-2j * np.pi * spacing * np.multiply.outer(np.sin(theta), n))


def steering_vector(theta_rad: float, ula: UlaConfig) -> np.ndarray:
    """ULA response ``exp(-j 2 pi d n sin(theta))`` for ``n = 0..N-1``."""
    if not abs(theta_rad) <= HALF_PI:
        raise ChannelError(f"angle {theta_rad!r} rad outside [-pi/2, pi/2]")
    return _array_phase(float(theta_rad), ula.num_antennas, ula.element_spacing_wavelengths)


def steering_matrix(thetas_rad, ula: UlaConfig) -> np.ndarray:
    """Stack of steering vectors as columns, shape (N, len(thetas))."""
    t = np.atleast_1d(np.asarray(thetas_rad, dtype=float))
    if np.any(np.abs(t) > HALF_PI):
        raise ChannelError("angles outside [-pi/2, pi/2]")
    return _array_phase(t, ula.num_antennas, ula.element_spacing_wavelengths).T


def _complex_normal(rng: np.random.Generator, size, variance: float = 1.0) -> np.ndarray:
    scale = math.sqrt(variance / 2)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def sample_uplink_channel(
    ula: UlaConfig,
    num_paths: int,
    rng: np.random.Generator,
    *,
    angles_rad=None,
    gains=None,
) -> ChannelRealization:
    """Multipath SIMO channel ``h = sum_l g_l a(theta_l)``.

    Angles are uniform on (-pi/2, pi/2) and gains are CN(0, 1/num_paths)
    unless forced through ``angles_rad`` / ``gains``.
    """
    if num_paths < 1:
        raise ChannelError("num_paths must be >= 1")
    theta = rng.uniform(-HALF_PI, HALF_PI, num_paths) if angles_rad is None else np.asarray(angles_rad, float)
    g = _complex_normal(rng, num_paths, 1.0 / num_paths) if gains is None else np.asarray(gains, complex)
    if theta.shape != (num_paths,) or g.shape != (num_paths,):
        raise ChannelError("forced angles/gains must have length num_paths")
    h = steering_matrix(theta, ula) @ g
    paths = [(float(t), 0.0, complex(x)) for t, x in zip(theta, g)]
    return ChannelRealization(h=h.reshape(-1, 1), paths=paths)


def _fold_angle(theta: np.ndarray) -> np.ndarray:
    # Reflection about +-pi/2 keeps sin(theta), hence the array response.
    theta = np.where(theta > HALF_PI, math.pi - theta, theta)
    return np.where(theta < -HALF_PI, -math.pi - theta, theta)


def sample_sv_channel(
    params: SvChannelParams,
    rng: np.random.Generator,
    *,
    aoa_rad=None,
    aod_rad=None,
    gains=None,
) -> ChannelRealization:
    """Saleh-Valenzuela narrowband channel, shape (num_rx, num_tx).

    ``H = gamma * sum_l alpha_l a_rx(theta_l) a_tx(phi_l)^H`` with
    ``gamma = sqrt(Nt Nr / L)`` and array responses normalized to unit norm,
    so ``E ||H||_F^2 = Nt Nr``. Cluster centres are uniform on
    (-pi/2, pi/2); rays are offset by a Laplacian whose standard deviation
    is ``angle_spread_deg``.
    """
    nc, nr_rays = params.num_clusters, params.rays_per_cluster
    total = params.num_paths
    if aoa_rad is None or aod_rad is None:
        b = math.radians(params.angle_spread_deg) / math.sqrt(2.0)
        centres_rx = rng.uniform(-HALF_PI, HALF_PI, nc)
        centres_tx = rng.uniform(-HALF_PI, HALF_PI, nc)
        off_rx = rng.laplace(0.0, b, (nc, nr_rays)) if b > 0 else np.zeros((nc, nr_rays))
        off_tx = rng.laplace(0.0, b, (nc, nr_rays)) if b > 0 else np.zeros((nc, nr_rays))
        theta = _fold_angle((centres_rx[:, None] + off_rx).ravel())
        phi = _fold_angle((centres_tx[:, None] + off_tx).ravel())
    if aoa_rad is not None:
        theta = np.asarray(aoa_rad, float).ravel()
    if aod_rad is not None:
        phi = np.asarray(aod_rad, float).ravel()
    alpha = _complex_normal(rng, total) if gains is None else np.asarray(gains, complex).ravel()
    if not theta.size == phi.size == alpha.size == total:
        raise ChannelError(f"forced angles/gains must have {total} entries")

    d = params.element_spacing_wavelengths
    a_rx = _array_phase(theta, params.num_rx, d).T / math.sqrt(params.num_rx)
    a_tx = _array_phase(phi, params.num_tx, d).T / math.sqrt(params.num_tx)
    gamma = math.sqrt(params.num_tx * params.num_rx / total)
    h = gamma * (a_rx * alpha) @ a_tx.conj().T
    paths = [(float(t), float(p), complex(g)) for t, p, g in zip(theta, phi, alpha)]
    return ChannelRealization(h=h, paths=paths)


def exponential_taps(num_taps: int, rng: np.random.Generator, decay: float = 1.0, size=None) -> np.ndarray:
    """Rayleigh taps with an exponential power-delay profile of unit total power.

    ``decay`` is the per-tap power drop in nepers; ``size`` prepends batch axes.
    """
    pdp = np.exp(-decay * np.arange(num_taps))
    pdp /= pdp.sum()
    shape = (num_taps,) if size is None else tuple(np.atleast_1d(size)) + (num_taps,)
    return _complex_normal(rng, shape) * np.sqrt(pdp)


def _check_length(x: np.ndarray, expected: int, what: str):
    if x.shape[-1] != expected:
        raise ChannelError(f"{what}: expected length {expected}, got {x.shape[-1]}")


def ofdm_modulate(x_freq, cfg: OfdmConfig) -> np.ndarray:
    """Unitary IDFT along the last axis, then prepend the cyclic prefix."""
    x = np.asarray(x_freq, dtype=np.complex128)
    _check_length(x, cfg.num_subcarriers, "ofdm_modulate")
    t = np.fft.ifft(x, norm="ortho")
    if cfg.cp_length == 0:
        return t
    return np.concatenate([t[..., -cfg.cp_length:], t], axis=-1)


def ofdm_demodulate(y_time, cfg: OfdmConfig) -> np.ndarray:
    """Strip the cyclic prefix, then unitary DFT along the last axis."""
    y = np.asarray(y_time, dtype=np.complex128)
    _check_length(y, cfg.symbol_length, "ofdm_demodulate")
    return np.fft.fft(y[..., cfg.cp_length:], norm="ortho")


def apply_multipath(x_time, taps) -> np.ndarray:
    """Linear convolution with ``taps`` truncated to the input length.

    Works along the last axis. A 1-D ``taps`` is shared by every row; a 2-D
    ``taps`` gives one tap vector per row of a 2-D input.
    """
    x = np.asarray(x_time, dtype=np.complex128)
    h = np.asarray(taps, dtype=np.complex128)
    if h.shape[-1] < 1:
        raise ChannelError("taps must have length >= 1")
    if h.ndim == 1:
        return lfilter(h, [1.0], x, axis=-1)
    if x.ndim != 2 or h.shape[0] != x.shape[0]:
        raise ChannelError("per-row taps need a 2-D input with matching rows")
    # Loop over taps rather than rows: batches are large, tap counts small.
    out = np.zeros_like(x)
    n = x.shape[1]
    for lag in range(min(h.shape[1], n)):
        out[:, lag:] += h[:, lag:lag + 1] * x[:, :n - lag]
    return out


def noise_variance(snr_db: float, signal_power: float = 1.0) -> float:
    """Per-complex-sample noise variance giving ``snr_db``; 0 for +inf."""
    if not signal_power > 0:
        raise ChannelError("signal_power must be positive")
    if snr_db == math.inf:
        return 0.0
    return signal_power / 10.0 ** (snr_db / 10.0)


def apply_awgn(signal, snr_db: float, signal_power: float, rng: np.random.Generator) -> np.ndarray:
    """Add circular complex Gaussian noise; ``snr_db=math.inf`` is a no-op."""
    x = np.asarray(signal, dtype=np.complex128)
    var = noise_variance(snr_db, signal_power)
    if var == 0.0:
        return x.copy()
    return x + _complex_normal(rng, x.shape, var)
