"""LS pilot channel estimation for OFDM and zero-forcing MIMO detection."""

from __future__ import annotations

import numpy as np

from ..channel import OfdmConfig
from ..numerics import as_complex_matrix
from .constellation import Constellation

__all__ = ["ls_channel_estimate", "zf_detect", "zf_equalize"]


def ls_channel_estimate(y_freq, pilot_positions, pilot_values, cfg: OfdmConfig) -> np.ndarray:
    """Per-subcarrier least-squares estimate from scattered pilots.

    ``H_k = Y_k / X_k`` on the pilots, linear interpolation of the real and
    imaginary parts in between and flat extrapolation past the outermost
    pilots. ``y_freq`` may carry leading batch axes.
    """
    y = np.asarray(y_freq, dtype=np.complex128)
    pos = np.asarray(pilot_positions, dtype=int)
    xp = np.asarray(pilot_values, dtype=np.complex128)
    if y.shape[-1] != cfg.num_subcarriers:
        raise ValueError(f"expected {cfg.num_subcarriers} subcarriers, got {y.shape[-1]}")
    if pos.shape != xp.shape[-1:] or pos.size == 0:
        raise ValueError("pilot positions and values must be non-empty and aligned")
    if np.any(xp == 0):
        raise ValueError("pilot value 0 cannot be divided out")
    if np.any(np.diff(pos) <= 0) or pos[0] < 0 or pos[-1] >= cfg.num_subcarriers:
        raise ValueError("pilot positions must be strictly increasing subcarrier indices")

    h_p = y[..., pos] / xp
    if pos.size == cfg.num_subcarriers:
        return h_p
    k = np.arange(cfg.num_subcarriers)
    flat = h_p.reshape(-1, pos.size)
    out = np.empty((flat.shape[0], cfg.num_subcarriers), dtype=np.complex128)
    for i, row in enumerate(flat):
        out[i] = np.interp(k, pos, row.real) + 1j * np.interp(k, pos, row.imag)
    return out.reshape(y.shape[:-1] + (cfg.num_subcarriers,))


def zf_equalize(h, y) -> np.ndarray:
    """``pinv(h) @ y``; ``y`` is a vector or a matrix of column observations."""
    hm = as_complex_matrix(h, "h")
    return np.linalg.pinv(hm) @ np.asarray(y, dtype=np.complex128)


def zf_detect(h, y, c: Constellation) -> tuple[np.ndarray, np.ndarray]:
    """Zero-forcing detection followed by nearest-point slicing.

    Returns ``(symbols, bits)``. For vector ``y`` the bits are a flat array
    of ``n_streams * bits_per_symbol`` entries; for a matrix of columns the
    bits are laid out per column.
    """
    x_hat = zf_equalize(h, y)
    symbols = c.slice(x_hat)
    if x_hat.ndim == 1:
        return symbols, c.demodulate(x_hat)
    return symbols, c.demodulate(x_hat.T)
