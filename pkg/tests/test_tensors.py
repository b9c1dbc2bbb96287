import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from momentmap import (contract_hessian_quadratic,
                       gaussian_fourth_central_moment, identity_tensor4,
                       symmetrize)


def unit_vectors(rng, n, count):
    u = rng.standard_normal((count, n))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


class TestIdentityTensor4:

    def test_scalar_case(self):
        assert_array_equal(identity_tensor4(1), np.ones((1, 1, 1, 1)))

    def test_known_entries_n2(self):
        t = identity_tensor4(2)
        assert t[0, 0, 0, 0] == 1.0
        assert t[1, 1, 1, 1] == 1.0
        assert_allclose(t[0, 0, 1, 1], 1.0 / 3.0, rtol=1e-15)
        assert_allclose(t[0, 1, 0, 1], 1.0 / 3.0, rtol=1e-15)
        assert t[0, 0, 0, 1] == 0.0

    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_totally_symmetric(self, n):
        t = identity_tensor4(n)
        for perm in itertools.permutations(range(4)):
            assert_array_equal(t.transpose(perm), t)

    def test_unit_quartic_form_is_one(self):
        """t : u⊗4 = 1 for every unit vector u."""
        for n in (2, 3, 4):
            t = identity_tensor4(n)
            u = unit_vectors(np.random.default_rng(n), n, 200)
            q = np.einsum("klpq,rk,rl,rp,rq->r", t, u, u, u, u)
            assert np.max(np.abs(q - 1.0)) < 1e-12

    def test_triple_contraction_returns_vector(self):
        for n in (2, 3, 4):
            t = identity_tensor4(n)
            u = unit_vectors(np.random.default_rng(10 + n), n, 200)
            w = np.einsum("klpq,rl,rp,rq->rk", t, u, u, u)
            assert np.max(np.abs(w - u)) < 1e-12

    def test_rejects_bad_dim(self):
        with pytest.raises(ValueError):
            identity_tensor4(0)


class TestSymmetrize:

    def test_projection_is_idempotent(self):
        rng = np.random.default_rng(4)
        t = rng.standard_normal((3, 3, 3, 3))
        s = symmetrize(t)
        assert_allclose(symmetrize(s), s, rtol=0, atol=1e-15)

    def test_output_symmetric(self):
        t = np.random.default_rng(5).standard_normal((2, 2, 2, 2))
        s = symmetrize(t)
        for perm in itertools.permutations(range(4)):
            assert_allclose(s.transpose(perm), s, atol=1e-15)

    def test_identity_tensor_is_fixpoint(self):
        t = identity_tensor4(3)
        assert_allclose(symmetrize(t), t, atol=1e-15)

    def test_rejects_non_tensor(self):
        with pytest.raises(ValueError):
            symmetrize(np.zeros((2, 3, 2, 2)))
        with pytest.raises(ValueError):
            symmetrize(np.zeros((2, 2, 2)))


class TestGaussianFourthMoment:

    def test_standard_gaussian_is_scaled_identity(self):
        for n in (1, 2, 4):
            e4 = gaussian_fourth_central_moment(np.eye(n))
            assert_allclose(e4, 3.0 * identity_tensor4(n), atol=1e-15)

    def test_isserlis_component_formula(self):
        """E[x_k x_l x_p x_q] = P_kl P_pq + P_kp P_lq + P_kq P_lp."""
        rng = np.random.default_rng(8)
        s = np.tril(rng.standard_normal((3, 3)))
        np.fill_diagonal(s, np.abs(np.diag(s)) + 0.5)
        p = s @ s.T
        e4 = gaussian_fourth_central_moment(s)
        for k, l, q, r in itertools.product(range(3), repeat=4):
            want = p[k, l] * p[q, r] + p[k, q] * p[l, r] + p[k, r] * p[l, q]
            assert_allclose(e4[k, l, q, r], want, rtol=1e-14)

    def test_against_monte_carlo(self):
        rng = np.random.default_rng(123)
        s = np.array([[1.0, 0.0], [0.4, 0.8]])
        x = rng.standard_normal((1_000_000, 2)) @ s.T
        emp = np.einsum("rk,rl,rp,rq->klpq", x, x, x, x) / x.shape[0]
        assert_allclose(gaussian_fourth_central_moment(s), emp, atol=0.05)

    def test_totally_symmetric(self):
        s = np.tril(np.random.default_rng(2).standard_normal((4, 4)))
        e4 = gaussian_fourth_central_moment(s)
        assert_allclose(symmetrize(e4), e4, atol=1e-14)

    def test_invariant_to_factor_orientation(self):
        """Only s·sᵀ matters, not the particular square root."""
        rng = np.random.default_rng(21)
        s = np.tril(rng.standard_normal((3, 3)))
        np.fill_diagonal(s, np.abs(np.diag(s)) + 1.0)
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        assert_allclose(gaussian_fourth_central_moment(s @ q),
                        gaussian_fourth_central_moment(s), rtol=1e-12)


class TestContractHessianQuadratic:

    def test_matches_einsum(self):
        rng = np.random.default_rng(17)
        g2 = rng.standard_normal((3, 4, 4))
        u = rng.standard_normal(4)
        assert_allclose(contract_hessian_quadratic(g2, u),
                        np.einsum("ikl,k,l->i", g2, u, u), rtol=1e-15)

    def test_quadratic_exactness(self):
        # for f_i(x) = x^T A_i x the Hessian is 2 A_i (symmetric part)
        a = np.array([[[1.0, 2.0], [2.0, -1.0]]])
        u = np.array([3.0, -1.0])
        got = contract_hessian_quadratic(2.0 * a, u)
        assert_allclose(got, [2.0 * (u @ a[0] @ u)], rtol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            contract_hessian_quadratic(np.zeros((2, 3, 3)), np.zeros(2))
        with pytest.raises(ValueError):
            contract_hessian_quadratic(np.zeros((2, 3, 2)), np.zeros(3))
