"""Power-domain NOMA: superposition, SIC detection and achievable rates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constellation import Constellation

__all__ = [
    "NomaConfig",
    "SicResult",
    "noma_superpose",
    "sic_order",
    "sic_decode",
    "achievable_rate",
    "orthogonal_rate",
]

POWER_SUM_TOL = 1e-12


@dataclass(frozen=True)
class NomaConfig:
    """Per-user power fractions of a unit total power budget."""

    powers: tuple

    def __post_init__(self):
        p = tuple(float(x) for x in self.powers)
        if not p:
            raise ValueError("at least one user is required")
        if any(not x > 0 for x in p):
            raise ValueError(f"powers must be positive, got {p}")
        if abs(sum(p) - 1.0) > POWER_SUM_TOL:
            raise ValueError(f"powers must sum to 1, got {sum(p)!r}")
        object.__setattr__(self, "powers", p)

    @classmethod
    def from_alpha(cls, alpha: float) -> "NomaConfig":
        """Two-user split ``(alpha, 1 - alpha)``; ``alpha = 1`` leaves one active user."""
        if not 0 < alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {alpha}")
        if alpha == 1:
            return cls((1.0,))
        return cls((alpha, 1.0 - alpha))

    @property
    def num_users(self) -> int:
        return len(self.powers)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.powers))


def noma_superpose(symbols, cfg: NomaConfig) -> np.ndarray:
    """``sum_i sqrt(p_i) x_i`` over the first axis of ``symbols``."""
    x = np.asarray(symbols, dtype=np.complex128)
    if x.shape[0] != cfg.num_users:
        raise ValueError(f"expected {cfg.num_users} user streams, got {x.shape[0]}")
    amp = cfg.amplitudes.reshape((-1,) + (1,) * (x.ndim - 1))
    return np.sum(amp * x, axis=0)


def sic_order(gains, powers) -> np.ndarray:
    """User indices by descending received power ``|g|^2 p``, ties by index."""
    rx = np.abs(np.asarray(gains, dtype=np.complex128)) ** 2 * np.asarray(powers, dtype=float)
    return np.argsort(-rx, kind="stable")


@dataclass
class SicResult:
    """Per-user decisions.

    ``bits[i]`` is ``None`` for a user flagged in ``undecodable`` (zero
    channel gain). ``ambiguous`` is set when two users arrive with equal
    power or a decision lands equidistant between constellation points.
    """

    bits: list
    symbols: list
    undecodable: list
    ambiguous: bool


def _tie(residual: np.ndarray, c: Constellation) -> bool:
    d = np.sort(np.abs(residual[..., None] - c.points), axis=-1)
    scale = max(1.0, float(np.max(np.abs(c.points))))
    return bool(np.any(d[..., 1] - d[..., 0] <= 1e-9 * scale))


def sic_decode(y, gains, cfg: NomaConfig, c: Constellation) -> SicResult:
    """Successive interference cancellation for ``y = sum_i g_i sqrt(p_i) x_i + n``.

    Users are detected strongest first; each decision is re-modulated,
    scaled by ``sqrt(p_i) g_i`` and subtracted before the next user.
    """
    y = np.asarray(y, dtype=np.complex128)
    g = np.broadcast_to(np.asarray(gains, dtype=np.complex128), (cfg.num_users,))
    rx = np.abs(g) ** 2 * np.asarray(cfg.powers)
    order = sic_order(g, cfg.powers)
    residual = y.copy()
    bits: list = [None] * cfg.num_users
    syms: list = [None] * cfg.num_users
    undecodable = [bool(abs(x) == 0) for x in g]
    ambiguous = bool(np.unique(rx[rx > 0]).size < np.count_nonzero(rx > 0))
    for i in order:
        if undecodable[i]:
            continue
        scale = np.sqrt(cfg.powers[i]) * g[i]
        z = residual / scale
        ambiguous |= _tie(z, c)
        x_hat = c.slice(z)
        bits[i] = c.demodulate(z)
        syms[i] = x_hat
        residual = residual - scale * x_hat
    return SicResult(bits=bits, symbols=syms, undecodable=undecodable, ambiguous=ambiguous)


def achievable_rate(gains, powers, noise_var: float, est_gains=None) -> np.ndarray:
    """Per-user Shannon rates (bits/s/Hz) under SIC at a single receiver.

    The user decoded at stage ``k`` sees every later user as interference
    plus the residue of imperfect cancellation of earlier users,
    ``sum p_j |g_j - g_hat_j|^2``. The decoding order follows the
    estimated gains; with ``est_gains=None`` the CSI is perfect and the
    residue vanishes. Trailing axes of ``gains`` broadcast (per-frame
    batches); the user axis is the last one.
    """
    g = np.asarray(gains, dtype=np.complex128)
    p = np.asarray(powers, dtype=float)
    g_hat = g if est_gains is None else np.asarray(est_gains, dtype=np.complex128)
    sig = np.abs(g) ** 2 * p
    resid = np.abs(g - g_hat) ** 2 * p
    est = np.abs(g_hat) ** 2 * p
    order = np.argsort(-est, axis=-1, kind="stable")
    sig_o = np.take_along_axis(sig, order, -1)
    res_o = np.take_along_axis(resid, order, -1)
    later = np.cumsum(sig_o[..., ::-1], axis=-1)[..., ::-1] - sig_o
    earlier = np.cumsum(res_o, axis=-1) - res_o
    with np.errstate(divide="ignore", invalid="ignore"):
        sinr = sig_o / (later + earlier + noise_var)
    sinr = np.where(np.isfinite(sinr), sinr, 0.0)
    rate_o = np.log2(1.0 + sinr)
    out = np.empty_like(rate_o)
    np.put_along_axis(out, order, rate_o, -1)
    return out


def orthogonal_rate(gains, powers, noise_var: float, fractions=None) -> np.ndarray:
    """Per-user rates when user ``i`` owns a bandwidth fraction ``fractions[i]``.

    The noise in each sub-band scales with its width. Equal fractions by
    default.
    """
    g = np.asarray(gains, dtype=np.complex128)
    p = np.asarray(powers, dtype=float)
    n = g.shape[-1]
    b = np.full(n, 1.0 / n) if fractions is None else np.asarray(fractions, dtype=float)
    if abs(b.sum() - 1.0) > 1e-9 or np.any(b < 0):
        raise ValueError("bandwidth fractions must be non-negative and sum to 1")
    with np.errstate(divide="ignore", invalid="ignore"):
        r = b * np.log2(1.0 + np.abs(g) ** 2 * p / (b * noise_var))
    return np.where(b > 0, r, 0.0)
