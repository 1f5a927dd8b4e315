"""Fully-digital SVD/GMD precoders and the analog/digital hybrid split."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import NumericsError, as_complex_matrix, gmd, svd

# Singular values of F_RF below this fraction of the largest are dropped, which
# keeps F_BB bounded when two analog beams become collinear.
PINV_RCOND = 1e-10

__all__ = [
    "PrecoderPair",
    "svd_precoder",
    "gmd_precoder",
    "hybrid_decompose",
    "hybrid_residual",
    "normalize_power",
    "zf_receiver",
    "qr_sic_receiver",
]


@dataclass(frozen=True)
class PrecoderPair:
    """``precoder`` (Nt, Ns), ``combiner`` (Ns, Nr) and per-stream gains."""

    precoder: np.ndarray
    combiner: np.ndarray
    effective_diag: np.ndarray

    @property
    def num_streams(self) -> int:
        return self.precoder.shape[1]


def _check_streams(h: np.ndarray, n_s: int) -> np.ndarray:
    f = svd(h)
    if n_s < 1:
        raise ValueError("n_s must be >= 1")
    if n_s > f.sigma.size or f.sigma[n_s - 1] <= 1e-12 * f.sigma[0]:
        raise NumericsError(f"n_s={n_s} exceeds the rank of the {h.shape[0]}x{h.shape[1]} channel")
    return f


def svd_precoder(h, n_s: int) -> PrecoderPair:
    """Top ``n_s`` right singular vectors; combiner is ``U_s^H``."""
    hm = as_complex_matrix(h, "h")
    f = _check_streams(hm, n_s)
    return PrecoderPair(
        precoder=f.v[:, :n_s].copy(),
        combiner=f.u[:, :n_s].conj().T,
        effective_diag=f.sigma[:n_s].copy(),
    )


def gmd_precoder(h, n_s: int) -> PrecoderPair:
    """``P`` and ``Q^H`` from the rank-``n_s`` GMD; every stream gain is ``sigma_bar``."""
    hm = as_complex_matrix(h, "h")
    _check_streams(hm, n_s)
    g = gmd(hm, n_s)
    return PrecoderPair(
        precoder=g.p,
        combiner=g.q.conj().T,
        effective_diag=np.full(n_s, g.sigma_bar),
    )


def normalize_power(f: np.ndarray, total: float) -> np.ndarray:
    """Scale ``f`` so that ``||f||_F^2 == total``."""
    return f * np.sqrt(total) / np.linalg.norm(f)


def hybrid_residual(f_opt, f_rf, f_bb) -> float:
    return float(np.linalg.norm(f_opt - f_rf @ f_bb))


def hybrid_decompose(f_opt, n_rf: int, iters: int, *, return_history: bool = False):
    """Split ``f_opt`` into a constant-modulus ``f_rf`` and a digital ``f_bb``.

    Alternating minimization of ``||F_opt - F_RF F_BB||_F``. The first
    ``Ns`` columns of ``F_RF`` start as the phases of ``F_opt`` itself, so a
    constant-modulus target is reproduced exactly; the remaining columns
    start as the phases of ``F_opt G^H`` with ``G`` the top ``n_rf`` rows of
    ``F_opt``. ``F_BB`` starts as ``pinv(F_RF) F_opt``. Each of the
    ``iters`` rounds re-extracts the phases of one ``F_RF`` column at a time
    against the residual left by the other columns, then solves
    ``F_BB = pinv(F_RF) F_opt``. A round that would raise the residual
    (rounding on nearly collinear columns) is discarded, so the residual
    never increases. Finally ``F_BB`` is rescaled so that
    ``||F_RF F_BB||_F^2 = Ns``.

    With ``return_history=True`` a third element lists the residual after
    each round (before the final power rescale).
    """
    f = as_complex_matrix(f_opt, "f_opt")
    nt, ns = f.shape
    if n_rf < ns:
        raise ValueError(f"n_rf={n_rf} cannot carry {ns} streams")
    if n_rf > nt:
        raise ValueError(f"n_rf={n_rf} exceeds the {nt} antennas")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    amp = 1.0 / np.sqrt(nt)
    f_rf = amp * np.exp(1j * np.angle(f @ f[:n_rf, :].conj().T))
    f_rf[:, :ns] = amp * np.exp(1j * np.angle(f))
    f_bb = np.linalg.pinv(f_rf, rcond=PINV_RCOND) @ f
    best = np.inf
    history = []
    for _ in range(iters):
        rf = f_rf.copy()
        for k in range(n_rf):
            partial = f - rf @ f_bb + np.outer(rf[:, k], f_bb[k])
            rf[:, k] = amp * np.exp(1j * np.angle(partial @ f_bb[k].conj()))
        bb = np.linalg.pinv(rf, rcond=PINV_RCOND) @ f
        res = hybrid_residual(f, rf, bb)
        if res <= best:
            f_rf, f_bb, best = rf, bb, res
        history.append(best)
    f_bb = f_bb * (np.sqrt(ns) / np.linalg.norm(f_rf @ f_bb))
    if return_history:
        return f_rf, f_bb, history
    return f_rf, f_bb


def zf_receiver(h_eff, y) -> np.ndarray:
    """Linear zero-forcing estimates ``pinv(h_eff) y``."""
    return np.linalg.pinv(h_eff) @ y


def qr_sic_receiver(h_eff, y, slicer) -> np.ndarray:
    """Decision-feedback detection on the QR factor of ``h_eff``.

    ``Q^H y = R x + n``; streams are detected from the last row up and
    their contribution cancelled. ``slicer`` maps soft values to points.
    ``y`` is a vector or a matrix of column observations; leading axes of
    ``h_eff`` and ``y`` stack independent channels. For a GMD precoder the
    QR factor equals the GMD's ``R`` up to column phases.
    """
    h = np.asarray(h_eff, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    vector = y.ndim == h.ndim - 1
    if vector:
        y = y[..., None]
    q, r = np.linalg.qr(h)
    z = np.swapaxes(q.conj(), -1, -2) @ y
    ns = r.shape[-1]
    x = np.zeros_like(z)
    for i in range(ns - 1, -1, -1):
        acc = z[..., i, :] - np.einsum("...k,...kt->...t", r[..., i, i + 1:], x[..., i + 1:, :])
        x[..., i, :] = slicer(acc / r[..., i, i][..., None])
    return x[..., 0] if vector else x
