"""Tests for tensor/tensor_core.py."""

import threading

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mtensor.app.core.errors import DimensionMismatchError, SingularSliceError
from mtensor.app.tensor import oracle
from mtensor.app.tensor.generators import gen_example_4_1, gen_example_4_2
from mtensor.app.tensor.tensor_core import (
    TTPCounter,
    conj_transpose,
    fro_norm,
    hat,
    identity_tensor,
    index_m,
    m_inverse,
    m_power,
    m_product,
    rank_m,
    slice_ranks,
    unhat,
)
from mtensor.app.tensor.transform import Tensor3
from tests.conftest import make_context, random_tensor, rel_err


class TestMProduct:
    @pytest.mark.parametrize("p", [2, 3, 4, 8])
    def test_dft_matches_t_product(self, rng, p):
        ctx = make_context("dft", p)
        for _ in range(13):
            A = random_tensor(rng, 3, 4, p)
            B = random_tensor(rng, 4, 2, p)
            got = m_product(A, B, ctx)
            expected = oracle.t_product_direct(A, B)
            assert fro_norm(got - expected) <= 1e-10 * fro_norm(A) * fro_norm(B)

    def test_associative(self, rng, ctx3):
        A = random_tensor(rng, 2, 3, 3)
        B = random_tensor(rng, 3, 4, 3)
        C = random_tensor(rng, 4, 2, 3)
        left = m_product(m_product(A, B, ctx3), C, ctx3)
        right = m_product(A, m_product(B, C, ctx3), ctx3)
        assert rel_err(left, right) < 1e-11

    def test_identity(self, rng, ctx3):
        A = random_tensor(rng, 3, 2, 3)
        assert rel_err(m_product(identity_tensor(3, ctx3), A, ctx3), A) < 1e-12
        assert rel_err(m_product(A, identity_tensor(2, ctx3), ctx3), A) < 1e-12

    def test_mat_homomorphism(self, rng, ctx3):
        A = random_tensor(rng, 3, 4, 3)
        B = random_tensor(rng, 4, 2, 3)
        assert oracle.mat_residual(A, B, m_product(A, B, ctx3), ctx3) < 1e-11

    def test_inner_dimension_mismatch(self, rng, ctx3):
        with pytest.raises(DimensionMismatchError):
            m_product(random_tensor(rng, 2, 3, 3), random_tensor(rng, 2, 3, 3), ctx3)

    def test_wrong_p(self, rng, ctx3):
        with pytest.raises(DimensionMismatchError):
            m_product(random_tensor(rng, 2, 2, 4), random_tensor(rng, 2, 2, 4), ctx3)

    def test_counter(self, rng, ctx3):
        counter = TTPCounter()
        A = random_tensor(rng, 2, 2, 3)
        m_product(A, A, ctx3, counter)
        m_product(A, A, ctx3, counter)
        assert counter.value == 2
        counter.reset()
        assert counter.value == 0


class TestTTPCounter:
    def test_threads(self):
        counter = TTPCounter()

        def work():
            for _ in range(1000):
                counter.increment()

        threads = [threading.Thread(target=work) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert counter.value == 4000


class TestAdjointAndInverse:
    def test_conj_transpose_hat_slices(self, rng, ctx3):
        A = random_tensor(rng, 3, 2, 3)
        At = conj_transpose(A, ctx3)
        assert At.dims == (2, 3, 3)
        assert_allclose(hat(At, ctx3), np.conj(np.swapaxes(hat(A, ctx3), 1, 2)), atol=1e-12)

    def test_dft_conj_transpose_is_t_transpose(self, rng):
        # under the DFT, A^H reverses slices 1..p-1 and transposes each one
        ctx = make_context("dft", 4)
        A = random_tensor(rng, 2, 3, 4)
        At = conj_transpose(A, ctx)
        expected = [A.frontal_slice(0).T] + [A.frontal_slice(4 - i).T for i in range(1, 4)]
        assert_allclose(At.data, np.array(expected), atol=1e-12)

    def test_inverse(self, rng, ctx3):
        A = random_tensor(rng, 4, 4, 3)
        X = m_inverse(A, ctx3)
        I = identity_tensor(4, ctx3)
        assert rel_err(m_product(A, X, ctx3), I) < 1e-10
        assert rel_err(m_product(X, A, ctx3), I) < 1e-10

    def test_inverse_singular_slice(self, ctx3):
        slices = np.stack([np.eye(3), np.diag([1.0, 1.0, 0.0]), np.eye(3)])
        A = unhat(slices, ctx3)
        with pytest.raises(SingularSliceError) as info:
            m_inverse(A, ctx3)
        assert info.value.index == 1

    def test_power(self, rng, ctx3):
        A = random_tensor(rng, 3, 3, 3)
        A3 = m_product(m_product(A, A, ctx3), A, ctx3)
        assert rel_err(m_power(A, 3, ctx3), A3) < 1e-11
        assert rel_err(m_power(A, 0, ctx3), identity_tensor(3, ctx3)) < 1e-12

    def test_power_requires_square(self, rng, ctx3):
        with pytest.raises(DimensionMismatchError):
            m_power(random_tensor(rng, 2, 3, 3), 2, ctx3)


class TestRankAndIndex:
    def test_rank_matches_mat(self, rng, ctx3):
        B = random_tensor(rng, 5, 2, 3)
        C = random_tensor(rng, 2, 4, 3)
        A = m_product(B, C, ctx3)
        assert slice_ranks(A, ctx3) == [2, 2, 2]
        assert rank_m(A, ctx3) == np.linalg.matrix_rank(oracle.mat(A, ctx3).to_dense(), tol=1e-8)

    def test_zero_tensor(self, ctx3):
        Z = Tensor3.zeros(3, 3, 3)
        assert rank_m(Z, ctx3) == 0
        assert index_m(Z, ctx3) == 1

    def test_invertible_has_index_zero(self, rng, ctx3):
        assert index_m(random_tensor(rng, 3, 3, 3), ctx3) == 0

    def test_nilpotent_slices(self, ctx3):
        N = np.diag([1.0, 1.0], k=1)
        A = unhat(np.stack([N, N, N]), ctx3)
        assert index_m(A, ctx3) == 3

    def test_example_4_1_dft(self):
        # the zero-frequency hat slice [[0, -1], [0, 1]] is a rank-one idempotent
        ctx = make_context("dft", 4)
        A = gen_example_4_1()
        assert slice_ranks(A, ctx) == [1, 2, 2, 2]
        assert rank_m(A, ctx) == 7
        assert index_m(A, ctx) == 1

    def test_example_4_2_dft(self):
        ctx = make_context("dft", 3)
        A = gen_example_4_2()
        assert rank_m(A, ctx) == 6
        assert index_m(A, ctx) == 1

    def test_tolerance_window(self, rng, ctx3):
        B = random_tensor(rng, 4, 2, 3)
        A = m_product(B, conj_transpose(B, ctx3), ctx3)
        assert {rank_m(A, ctx3, tol) for tol in (1e-12, 1e-10, 1e-8)} == {6}
