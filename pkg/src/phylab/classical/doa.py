"""MUSIC direction-of-arrival estimation on a uniform linear array."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import UlaConfig, steering_matrix
from ..numerics import as_complex_matrix, eig_hermitian

__all__ = ["DoaEstimate", "angle_grid_deg", "music_spectrum", "music_doa", "find_peaks"]


@dataclass(frozen=True)
class DoaEstimate:
    angles_deg: list
    degenerate: bool = False


def angle_grid_deg(step_deg: float) -> np.ndarray:
    """Grid from -90 to 90 degrees inclusive."""
    if not step_deg > 0:
        raise ValueError("grid step must be positive")
    n = int(round(180.0 / step_deg))
    return np.clip(-90.0 + step_deg * np.arange(n + 1), -90.0, 90.0)


def music_spectrum(snapshots, num_sources: int, ula: UlaConfig, grid_deg) -> np.ndarray:
    """Pseudo-spectrum ``1 / ||E_n^H a(theta)||^2`` on ``grid_deg``."""
    x = as_complex_matrix(snapshots, "snapshots")
    n, t = x.shape
    if n != ula.num_antennas:
        raise ValueError(f"snapshots have {n} rows, ULA has {ula.num_antennas} elements")
    if not 1 <= num_sources < n:
        raise ValueError(f"num_sources must be in 1..{n - 1}, got {num_sources}")
    if t < num_sources:
        raise ValueError(f"need at least {num_sources} snapshots, got {t}")
    cov = x @ x.conj().T / t
    _, vecs = eig_hermitian(cov)
    noise = vecs[:, num_sources:]
    a = steering_matrix(np.deg2rad(grid_deg), ula)
    denom = np.sum(np.abs(noise.conj().T @ a) ** 2, axis=0)
    return 1.0 / np.maximum(denom, np.finfo(float).tiny)


def find_peaks(values: np.ndarray) -> np.ndarray:
    """Indices of local maxima; plateaus report their first (left) point.

    Endpoints count when strictly above their single neighbour.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 1:
        return np.array([0])
    left = np.empty(v.size, bool)
    right = np.empty(v.size, bool)
    left[0] = True
    left[1:] = v[1:] > v[:-1]
    right[-1] = v[-1] > v[-2]
    right[:-1] = v[:-1] >= v[1:]
    right[0] = v[0] > v[1]
    return np.flatnonzero(left & right)


def music_doa(snapshots, num_sources: int, ula: UlaConfig, grid_step_deg: float = 0.1) -> DoaEstimate:
    """Return the ``num_sources`` strongest MUSIC peaks in ascending order.

    Peaks are ranked by spectrum height; equal heights prefer the smaller
    angle. If the spectrum has fewer local maxima than requested, the ones
    found are returned and ``degenerate`` is set.
    """
    grid = angle_grid_deg(grid_step_deg)
    spec = music_spectrum(snapshots, num_sources, ula, grid)
    peaks = find_peaks(spec)
    order = peaks[np.argsort(-spec[peaks], kind="stable")]
    chosen = np.sort(order[:num_sources])
    return DoaEstimate(
        angles_deg=[float(grid[i]) for i in chosen],
        degenerate=bool(chosen.size < num_sources),
    )
