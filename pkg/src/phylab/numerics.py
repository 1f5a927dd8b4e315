"""Dense complex linear algebra: SVD, Hermitian eigendecomposition and GMD.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The helpers
here validate inputs, pin down the phase conventions that LAPACK leaves
free, and build the geometric mean decomposition on top of the SVD.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NumericsError",
    "SvdFactors",
    "GmdFactors",
    "as_complex_matrix",
    "svd",
    "eig_hermitian",
    "gmd",
]

# Relative threshold below which a singular value counts as numerically zero.
RANK_TOL = 1e-12
HERMITIAN_TOL = 1e-12


class NumericsError(ValueError):
    """Raised when a factorization cannot be computed for the given input."""


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D complex128 array (a copy is not forced)."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise NumericsError(f"{name} must be 2-D, got shape {m.shape}")
    if m.size == 0:
        raise NumericsError(f"{name} is empty (shape {m.shape})")
    if not np.all(np.isfinite(m)):
        raise NumericsError(f"{name} has non-finite entries")
    return m


def _fix_column_phases(u: np.ndarray) -> np.ndarray:
    """Per-column unit phases that make the largest-magnitude entry real positive."""
    idx = np.argmax(np.abs(u), axis=0)
    lead = u[idx, np.arange(u.shape[1])]
    mag = np.abs(lead)
    phase = np.ones_like(lead)
    nz = mag > 0
    phase[nz] = lead[nz] / mag[nz]
    return phase


@dataclass(frozen=True)
class SvdFactors:
    """Full SVD ``a = u @ diag(sigma) @ v^H`` with ``u`` (m, m) and ``v`` (n, n)."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        k = self.sigma.size
        return (self.u[:, :k] * self.sigma) @ self.v[:, :k].conj().T


@dataclass(frozen=True)
class GmdFactors:
    """Truncated GMD ``A_K = q @ r @ p^H`` with equal real diagonal in ``r``."""

    q: np.ndarray
    r: np.ndarray
    p: np.ndarray
    sigma_bar: float

    def reconstruct(self) -> np.ndarray:
        return self.q @ self.r @ self.p.conj().T


def svd(a) -> SvdFactors:
    """Full singular value decomposition with a reproducible phase convention.

    Each column of ``u`` is rotated so that its largest-magnitude entry is
    real and positive; the matching column of ``v`` gets the same rotation
    so the product is unchanged. Columns of ``v`` with no partner in ``u``
    follow the same rule on their own.

    Raises
    ------
    NumericsError
        If the input is empty or non-finite, or if LAPACK fails to converge.
    """
    m = as_complex_matrix(a)
    rows, cols = m.shape
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericsError(f"SVD did not converge for a {rows}x{cols} matrix") from exc
    v = vh.conj().T
    k = s.size

    ph_u = _fix_column_phases(u)
    u = u / ph_u
    v[:, :k] = v[:, :k] / ph_u[:k]
    if cols > k:
        v[:, k:] = v[:, k:] / _fix_column_phases(v[:, k:])
    return SvdFactors(u=u, sigma=s.astype(np.float64), v=v)


def eig_hermitian(a, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    The input is symmetrized as ``(a + a^H) / 2`` after checking that it is
    Hermitian to within ``tol * max(1, |a|_max)``.

    Returns
    -------
    eigenvalues : ndarray of float, non-increasing
    eigenvectors : ndarray, column ``i`` pairs with ``eigenvalues[i]``
    """
    m = as_complex_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise NumericsError(f"eig_hermitian needs a square matrix, got {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))))
    asym = float(np.max(np.abs(m - m.conj().T)))
    if asym > tol * scale:
        raise NumericsError(f"matrix is not Hermitian (max |A - A^H| = {asym:.3e})")
    m = 0.5 * (m + m.conj().T)
    try:
        w, vecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericsError(f"eigh did not converge for a {m.shape[0]}x{m.shape[0]} matrix") from exc
    order = np.arange(w.size)[::-1]
    vecs = vecs[:, order]
    vecs = vecs / _fix_column_phases(vecs)
    return w[order].astype(np.float64), vecs


def _gmd_rotation(d1: float, d2: float, target: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Real rotations ``g_left, g_right`` with ``g_left.T @ diag(d1, d2) @ g_right``
    equal to ``[[target, x], [0, d1 * d2 / target]]``.

    Requires ``target`` to lie between ``d1`` and ``d2``.
    """
    denom = d1 * d1 - d2 * d2
    if abs(denom) <= 1e-15 * max(d1 * d1, d2 * d2):
        return np.eye(2), np.eye(2), 0.0
    c2 = (target * target - d2 * d2) / denom
    c = np.sqrt(min(max(c2, 0.0), 1.0))
    s = np.sqrt(max(1.0 - c * c, 0.0))
    g_right = np.array([[c, -s], [s, c]])
    g_left = np.array([[c * d1, -s * d2], [s * d2, c * d1]]) / target
    x = c * s * (d2 * d2 - d1 * d1) / target
    return g_left, g_right, x


def gmd(a, k: int | None = None) -> GmdFactors:
    """Geometric mean decomposition of the rank-``k`` truncation of ``a``.

    Starts from the truncated SVD ``U_k diag(s) V_k^H`` and walks down the
    diagonal. At step ``i`` the diagonal entry at ``i`` is paired with a
    trailing entry on the other side of the geometric mean (first such
    index, after a symmetric swap into slot ``i + 1``) and a pair of real
    Givens-type rotations sets entry ``i`` to the geometric mean. The
    trailing block stays diagonal throughout, so the swaps keep ``r``
    upper triangular.

    Parameters
    ----------
    a : array_like
        Complex matrix of shape (m, n).
    k : int, optional
        Number of retained singular values. Defaults to ``min(m, n)``.

    Returns
    -------
    GmdFactors
        ``q`` (m, k) and ``p`` (n, k) with orthonormal columns, ``r`` (k, k)
        upper triangular with every diagonal entry equal to ``sigma_bar``.
    """
    m = as_complex_matrix(a)
    f = svd(m)
    kmax = f.sigma.size
    if k is None:
        k = kmax
    if not 1 <= k <= kmax:
        raise NumericsError(f"k={k} outside 1..{kmax} for a {m.shape[0]}x{m.shape[1]} matrix")
    s = f.sigma[:k].copy()
    if s[-1] <= RANK_TOL * s[0]:
        raise NumericsError(
            f"k={k} exceeds the numerical rank (sigma_k/sigma_1 = {s[-1] / s[0]:.3e})"
        )

    sigma_bar = float(np.exp(np.mean(np.log(s))))
    q = f.u[:, :k].copy()
    p = f.v[:, :k].copy()
    r = np.diag(s).astype(np.complex128)

    for i in range(k - 1):
        d = r[i, i].real
        tail = np.array([r[j, j].real for j in range(i + 1, k)])
        if d >= sigma_bar:
            cand = np.flatnonzero(tail <= sigma_bar)
        else:
            cand = np.flatnonzero(tail >= sigma_bar)
        # The product constraint guarantees a candidate; fall back to the
        # extreme entry when rounding hides it.
        j = i + 1 + (int(cand[0]) if cand.size else int(np.argmin(np.abs(tail - sigma_bar))))
        if j != i + 1:
            for mat in (q, p):
                mat[:, [i + 1, j]] = mat[:, [j, i + 1]]
            r[:, [i + 1, j]] = r[:, [j, i + 1]]
            r[[i + 1, j], :] = r[[j, i + 1], :]

        d1, d2 = r[i, i].real, r[i + 1, i + 1].real
        g_left, g_right, x = _gmd_rotation(d1, d2, sigma_bar)
        if x == 0.0 and np.array_equal(g_left, np.eye(2)):
            continue
        # Columns i, i+1 of the rows above carry accumulated couplings.
        r[:i, i:i + 2] = r[:i, i:i + 2] @ g_right
        r[i, i] = sigma_bar
        r[i, i + 1] = x
        r[i + 1, i] = 0.0
        r[i + 1, i + 1] = d1 * d2 / sigma_bar
        q[:, i:i + 2] = q[:, i:i + 2] @ g_left
        p[:, i:i + 2] = p[:, i:i + 2] @ g_right

    # The last entry equals sigma_bar up to rounding through the product identity.
    r[k - 1, k - 1] = r[k - 1, k - 1].real
    return GmdFactors(q=q, r=r, p=p, sigma_bar=sigma_bar)
