"""Gray-labelled BPSK / QPSK / 16-QAM with unit average energy."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..channel import ConstellationKind

__all__ = ["Constellation", "make_constellation", "qpsk", "bits_to_int", "int_to_bits"]


def int_to_bits(values, width: int) -> np.ndarray:
    """MSB-first binary expansion; output has a trailing axis of length ``width``."""
    v = np.asarray(values, dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1)
    return ((v[..., None] >> shifts) & 1).astype(np.uint8)


def bits_to_int(bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64)
    width = b.shape[-1]
    return (b << np.arange(width - 1, -1, -1)).sum(axis=-1)


@dataclass(frozen=True, eq=False)
class Constellation:
    """Point set indexed by its integer bit label.

    ``points[i]`` carries the label ``int_to_bits(i, bits_per_symbol)``, so
    ties in nearest-point slicing (``argmin`` returns the first index) go to
    the lower label.
    """

    kind: ConstellationKind
    points: np.ndarray

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.points.size))

    @property
    def labels(self) -> np.ndarray:
        return int_to_bits(np.arange(self.points.size), self.bits_per_symbol)

    def modulate(self, bits) -> np.ndarray:
        """Map a bit array (last axis a multiple of ``bits_per_symbol``) to symbols."""
        b = np.asarray(bits)
        k = self.bits_per_symbol
        if b.shape[-1] % k:
            raise ValueError(f"bit count {b.shape[-1]} not a multiple of {k}")
        groups = b.reshape(b.shape[:-1] + (b.shape[-1] // k, k))
        return self.points[bits_to_int(groups)]

    def slice_indices(self, symbols) -> np.ndarray:
        s = np.asarray(symbols, dtype=np.complex128)
        d = np.abs(s[..., None] - self.points)
        return np.argmin(d, axis=-1)

    def slice(self, symbols) -> np.ndarray:
        return self.points[self.slice_indices(symbols)]

    def demodulate(self, symbols) -> np.ndarray:
        """Hard nearest-point decisions back to bits (last axis flattened)."""
        idx = self.slice_indices(symbols)
        bits = int_to_bits(idx, self.bits_per_symbol)
        return bits.reshape(bits.shape[:-2] + (-1,))


def _gray_pam(levels: int) -> np.ndarray:
    """Amplitudes indexed by Gray label, e.g. 4-PAM: 00->-3, 01->-1, 11->+1, 10->+3."""
    amps = np.arange(-(levels - 1), levels, 2, dtype=float)
    out = np.empty(levels)
    for pos in range(levels):
        out[pos ^ (pos >> 1)] = amps[pos]
    return out


@lru_cache(maxsize=None)
def make_constellation(kind) -> Constellation:
    kind = ConstellationKind(kind)
    if kind is ConstellationKind.BPSK:
        pts = np.array([1.0, -1.0], dtype=np.complex128)
    elif kind is ConstellationKind.QPSK:
        axis = _gray_pam(2)
        pts = np.array([axis[i >> 1] + 1j * axis[i & 1] for i in range(4)]) / np.sqrt(2)
    else:
        axis = _gray_pam(4)
        pts = np.array([axis[i >> 2] + 1j * axis[i & 3] for i in range(16)]) / np.sqrt(10)
    pts.setflags(write=False)
    return Constellation(kind=kind, points=pts)


def qpsk() -> Constellation:
    return make_constellation(ConstellationKind.QPSK)
