"""SVD, Hermitian eigendecomposition and GMD."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phylab.numerics import NumericsError, as_complex_matrix, eig_hermitian, gmd, svd


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def singular_values_via_gram(a):
    # Independent route: square roots of the eigenvalues of A^H A.
    w = np.linalg.eigvalsh(a.conj().T @ a if a.shape[0] >= a.shape[1] else a @ a.conj().T)
    return np.sqrt(np.clip(w[::-1], 0, None))


class TestInputValidation:
    def test_vector_becomes_column(self):
        assert as_complex_matrix(np.ones(3)).shape == (3, 1)

    def test_rejects_three_dimensional(self):
        with pytest.raises(NumericsError, match="2-D"):
            as_complex_matrix(np.ones((2, 2, 2)))

    def test_rejects_empty(self):
        with pytest.raises(NumericsError, match="empty"):
            svd(np.zeros((0, 3)))

    @pytest.mark.parametrize("bad", [np.nan, np.inf])
    def test_rejects_non_finite(self, bad):
        m = np.eye(2)
        m[0, 1] = bad
        with pytest.raises(NumericsError, match="non-finite"):
            gmd(m)


class TestSvd:
    @pytest.mark.parametrize("shape", [(1, 1), (4, 4), (3, 7), (9, 2)])
    def test_reconstruction_and_unitarity(self, shape):
        rng = np.random.default_rng(sum(shape))
        a = crandn(rng, *shape)
        f = svd(a)
        assert np.max(np.abs(f.reconstruct() - a)) <= 1e-9 * np.max(np.abs(a))
        assert np.allclose(f.u.conj().T @ f.u, np.eye(shape[0]), atol=1e-12)
        assert np.allclose(f.v.conj().T @ f.v, np.eye(shape[1]), atol=1e-12)
        assert np.all(np.diff(f.sigma) <= 0) and np.all(f.sigma >= 0)

    def test_matches_gram_route(self):
        rng = np.random.default_rng(3)
        a = crandn(rng, 6, 4)
        np.testing.assert_allclose(svd(a).sigma, singular_values_via_gram(a), rtol=1e-10)

    def test_phase_convention(self):
        rng = np.random.default_rng(4)
        f = svd(crandn(rng, 5, 5))
        for col in f.u.T:
            top = col[np.argmax(np.abs(col))]
            assert abs(top.imag) < 1e-12 and top.real > 0

    def test_deterministic(self):
        a = crandn(np.random.default_rng(5), 4, 3)
        f1, f2 = svd(a), svd(a.copy())
        assert np.array_equal(f1.u, f2.u) and np.array_equal(f1.v, f2.v)

    def test_zero_matrix(self):
        f = svd(np.zeros((3, 2)))
        assert np.all(f.sigma == 0)


class TestEigHermitian:
    def test_decomposition(self):
        rng = np.random.default_rng(6)
        b = crandn(rng, 6, 6)
        a = b @ b.conj().T
        w, v = eig_hermitian(a)
        assert np.all(np.diff(w) <= 0)
        np.testing.assert_allclose(a @ v, v * w, atol=1e-10 * np.max(np.abs(a)))
        np.testing.assert_allclose(np.sort(w), np.sort(np.linalg.eigvals(a).real), rtol=1e-9, atol=1e-9)

    def test_rejects_non_hermitian(self):
        with pytest.raises(NumericsError, match="not Hermitian"):
            eig_hermitian(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_rectangular(self):
        with pytest.raises(NumericsError, match="square"):
            eig_hermitian(np.ones((2, 3)))

    def test_tolerates_rounding_asymmetry(self):
        a = np.array([[2.0, 1.0], [1.0 + 1e-14, 2.0]])
        w, _ = eig_hermitian(a)
        np.testing.assert_allclose(w, [3.0, 1.0], atol=1e-12)


class TestGmd:
    def test_two_by_two_hand_derived(self):
        # sigma_bar = 2; c^2 = (4 - 1)/(16 - 1), off-diagonal c s (1 - 16)/2 = -3.
        g = gmd(np.diag([4.0, 1.0]))
        np.testing.assert_allclose(g.r, [[2.0, -3.0], [0.0, 2.0]], atol=1e-12)
        assert g.sigma_bar == pytest.approx(2.0)

    @pytest.mark.parametrize("shape,k", [((4, 4), None), ((4, 16), 2), ((16, 4), 3), ((8, 8), 8), ((5, 3), 1)])
    def test_invariants(self, shape, k):
        rng = np.random.default_rng(shape[0] * 31 + shape[1])
        a = crandn(rng, *shape)
        g = gmd(a, k)
        kk = g.r.shape[0]
        s = singular_values_via_gram(a)[:kk]
        assert g.sigma_bar == pytest.approx(np.prod(s) ** (1 / kk), rel=1e-10)
        np.testing.assert_allclose(np.diag(g.r).real, g.sigma_bar, rtol=1e-8)
        assert np.max(np.abs(np.tril(g.r, -1))) == 0
        assert np.allclose(g.q.conj().T @ g.q, np.eye(kk), atol=1e-12)
        assert np.allclose(g.p.conj().T @ g.p, np.eye(kk), atol=1e-12)
        f = svd(a)
        a_k = (f.u[:, :kk] * f.sigma[:kk]) @ f.v[:, :kk].conj().T
        assert np.max(np.abs(g.reconstruct() - a_k)) <= 1e-9 * np.max(np.abs(a))

    def test_single_value_is_svd(self):
        rng = np.random.default_rng(9)
        a = crandn(rng, 4, 6)
        g, f = gmd(a, 1), svd(a)
        assert g.r[0, 0] == pytest.approx(f.sigma[0])

    def test_equal_singular_values_need_no_rotation(self):
        g = gmd(3.0 * np.eye(3))
        np.testing.assert_allclose(g.r, 3.0 * np.eye(3), atol=1e-12)

    def test_rejects_rank_deficient_k(self):
        a = np.outer([1.0, 2.0, 3.0], [1.0, -1.0, 0.5])
        with pytest.raises(NumericsError, match="numerical rank"):
            gmd(a, 2)

    @pytest.mark.parametrize("k", [0, 5])
    def test_rejects_k_out_of_range(self, k):
        with pytest.raises(NumericsError, match="outside"):
            gmd(np.eye(4), k)

    @settings(max_examples=60, deadline=None)
    @given(
        rows=st.integers(1, 8),
        cols=st.integers(1, 8),
        seed=st.integers(0, 2**32 - 1),
        log_cond=st.floats(0.0, 6.0),
    )
    def test_property_equal_diagonal(self, rows, cols, seed, log_cond):
        rng = np.random.default_rng(seed)
        u, _ = np.linalg.qr(crandn(rng, rows, rows))
        v, _ = np.linalg.qr(crandn(rng, cols, cols))
        k = min(rows, cols)
        s = np.logspace(0, -log_cond, k)
        a = (u[:, :k] * s) @ v[:, :k].conj().T
        g = gmd(a)
        np.testing.assert_allclose(np.diag(g.r).real, g.sigma_bar, rtol=1e-8)
        assert np.max(np.abs(g.reconstruct() - a)) <= 1e-9 * np.max(np.abs(a))


class TestSmallCases:
    def test_identity_svd(self):
        np.testing.assert_allclose(svd(np.eye(3)).sigma, [1, 1, 1])

    def test_diagonal_svd_is_trivial(self):
        f = svd(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(f.sigma, [3.0, 1.0])
        np.testing.assert_allclose(np.abs(f.u), np.eye(2), atol=1e-15)
        np.testing.assert_allclose(np.abs(f.v), np.eye(2), atol=1e-15)

    @pytest.mark.parametrize("a,expected", [(np.eye(4), [1, 1, 1, 1]), (np.diag([2.0, 5.0]), [5.0, 2.0])])
    def test_eig_small(self, a, expected):
        np.testing.assert_allclose(eig_hermitian(a)[0], expected)

    def test_eig_trace_identity(self):
        b = crandn(np.random.default_rng(11), 6, 6)
        a = b + b.conj().T
        assert np.sum(eig_hermitian(a)[0]) == pytest.approx(np.trace(a).real, abs=1e-10)

    def test_gmd_identity(self):
        np.testing.assert_allclose(gmd(np.eye(3), 3).r, np.eye(3), atol=1e-15)

    def test_gmd_rank_three_of_random(self):
        a = crandn(np.random.default_rng(12), 4, 4)
        s = singular_values_via_gram(a)
        g = gmd(a, 3)
        np.testing.assert_allclose(np.diag(g.r).real, np.prod(s[:3]) ** (1 / 3), rtol=1e-8)
