import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from bsnlab.eigensolve import (EigenError, cluster, constrained_basis, kernel_split, null_space,
                               solve_definite, solve_semidefinite)


def random_spd(rng, n, cond=10.0):
    Q = np.linalg.qr(rng.standard_normal((n, n)))[0]
    return Q @ np.diag(np.linspace(1.0, cond, n)) @ Q.T


class TestDefinite:
    def test_diagonal(self):
        res = solve_definite(np.diag([3.0, 1.0, 2.0]), np.eye(3))
        np.testing.assert_allclose(res.values, [1, 2, 3])
        assert res.residuals.max() < 1e-14

    def test_subset(self):
        rng = np.random.default_rng(0)
        A, B = random_spd(rng, 20), random_spd(rng, 20)
        full = solve_definite(A, B).values
        np.testing.assert_allclose(solve_definite(A, B, k=4).values, full[:4])

    def test_rejects_indefinite_b(self):
        with pytest.raises(EigenError):
            solve_definite(np.eye(2), np.diag([1.0, -1.0]))

    def test_rejects_nonsymmetric(self):
        with pytest.raises(EigenError, match="not symmetric"):
            solve_definite(np.array([[1.0, 2.0], [0.0, 1.0]]), np.eye(2))


class TestSemidefinite:
    def test_rank_deficient_b(self):
        """Only rank(B) finite eigenvalues; they match the projected problem."""
        rng = np.random.default_rng(1)
        A = random_spd(rng, 8)
        Y = rng.standard_normal((8, 3))
        B = Y @ Y.T
        res = solve_semidefinite(A, B)
        assert res.finite_count == 3
        # closed form: θ solves det(Yᵀ A⁻¹ Y - θ⁻¹) = 0
        chi = np.linalg.eigvalsh(Y.T @ np.linalg.solve(A, Y))
        np.testing.assert_allclose(res.values, np.sort(1 / chi), rtol=1e-10)
        assert res.residuals.max() < 1e-12

    def test_kernel_deflation(self):
        rng = np.random.default_rng(2)
        n = 9
        z = np.ones(n) / 3.0
        P = np.eye(n) - np.outer(z, z)
        A = P @ random_spd(rng, n) @ P
        B = random_spd(rng, n)
        res = solve_semidefinite(A, B, deflation=z[:, None])
        assert res.deflated == 1 and res.values[0] == 0.0
        # reference: definite problem on the B-orthogonal complement of z
        W = sla.null_space((B @ z)[None, :])
        ref = sla.eigh(W.T @ A @ W, W.T @ B @ W, eigvals_only=True)
        np.testing.assert_allclose(res.values[1:], ref, rtol=1e-10)

    def test_subset_matches_full(self):
        rng = np.random.default_rng(3)
        A = random_spd(rng, 15)
        Y = rng.standard_normal((15, 6))
        B = Y @ Y.T
        full = solve_semidefinite(A, B)
        part = solve_semidefinite(A, B, k=3)
        np.testing.assert_allclose(part.values, full.values[:3], rtol=1e-12)
        assert part.finite_count == full.finite_count == 6

    def test_bad_deflation(self):
        with pytest.raises(EigenError, match="A-null"):
            solve_semidefinite(np.eye(3), np.eye(3), deflation=np.ones((3, 1)))

    def test_singular_a_without_deflation(self):
        with pytest.raises(EigenError):
            solve_semidefinite(np.diag([1.0, 0.0]), np.eye(2))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6), scale=st.floats(0.1, 10.0))
    def test_scaling(self, seed, scale):
        """θ(cA, B) = c·θ(A, B) and θ(A, cB) = θ(A, B)/c."""
        rng = np.random.default_rng(seed)
        A = random_spd(rng, 6)
        Y = rng.standard_normal((6, 2))
        B = Y @ Y.T
        base = solve_semidefinite(A, B).values
        np.testing.assert_allclose(solve_semidefinite(scale * A, B).values, scale * base, rtol=1e-8)
        np.testing.assert_allclose(solve_semidefinite(A, scale * B).values, base / scale, rtol=1e-8)


class TestKernelSplit:
    def test_clean_gap(self):
        assert kernel_split([1e-12, 2e-12, 1.0, 2.0], 1e-2) == 2

    def test_no_kernel(self):
        assert kernel_split([1.0, 2.0, 3.0], 1e-2) == 0

    def test_ambiguous(self):
        with pytest.raises(EigenError, match="ambiguous"):
            kernel_split([1e-2, 1.0, 2.0], 1e-2)

    def test_small_but_nonzero_kernel(self):
        assert kernel_split([9.1e-5, 1.84, 2.0, 5.0], 1e-2) == 1


def test_cluster():
    assert cluster([1.0, 1.0 + 1e-9, 2.0, 3.0, 3.0]) == [(pytest.approx(1.0), 2), (2.0, 1), (3.0, 2)]


class TestNullSpace:
    def test_orthonormal_kernel(self):
        C = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 2.0]])
        N = null_space(C)
        assert N.shape == (3, 1)
        np.testing.assert_allclose(C @ N, 0.0, atol=1e-14)
        np.testing.assert_allclose(N.T @ N, np.eye(1))

    def test_near_cutoff_raises(self):
        with pytest.raises(EigenError, match="ambiguous"):
            null_space(np.array([[1.0, 0.0], [1.0, 1e-10]]))

    def test_sparse_basis_keeps_free_dofs(self):
        import scipy.sparse as sp
        C = sp.csr_matrix(np.array([[0.0, 1.0, -1.0, 0.0]]))
        N = constrained_basis(C, 4).toarray()
        assert N.shape == (4, 3)
        np.testing.assert_allclose(C @ N, 0.0, atol=1e-14)
        np.testing.assert_allclose(N.T @ N, np.eye(3), atol=1e-14)
