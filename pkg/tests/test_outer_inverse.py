"""Tests for tensor/outer_inverse.py, checked against the block-diagonal oracle."""

import numpy as np
import pytest

from mtensor.app.core.errors import (
    DimensionMismatchError,
    EmptyRankError,
    IndexNotOneError,
    NonUniformRankError,
    OuterInverseNotExistError,
)
from mtensor.app.tensor import oracle
from mtensor.app.tensor.generators import Family, GeneratorSpec, build_tensor, gen_random_index1
from mtensor.app.tensor.mqr import full_rank_decomposition
from mtensor.app.tensor.outer_inverse import (
    InverseKind,
    OuterInverseRequest,
    OuterVariant,
    check_existence,
    drazin_qr,
    group_inverse_qr,
    moore_penrose_qr,
    outer_inverse_full_rank,
    outer_inverse_qr,
    residual_report,
    solve_request,
    zero_inverse,
)
from mtensor.app.tensor.tensor_core import (
    fro_norm,
    identity_tensor,
    index_m,
    m_inverse,
    m_power,
    m_product,
    unhat,
)
from mtensor.app.tensor.transform import Tensor3
from tests.conftest import make_context, random_tensor, rel_err


def _weight(rng, ctx, m, n, s):
    return m_product(random_tensor(rng, n, s, ctx.p), random_tensor(rng, s, m, ctx.p), ctx)


class TestOuterInverse:
    def test_matches_oracle_both_variants(self, rng, ctx3):
        for m, n, s in [(5, 4, 2), (4, 4, 3), (3, 6, 1), (6, 6, 4)]:
            A = random_tensor(rng, m, n, 3)
            W = _weight(rng, ctx3, m, n, s)
            expected = oracle.outer_via_mat(A, W, ctx3)
            qr_b = outer_inverse_qr(A, W, ctx3)
            qr_d = outer_inverse_qr(A, W, ctx3, variant=OuterVariant.QR_D)
            assert rel_err(qr_b, expected) < 1e-9
            assert rel_err(qr_d, expected) < 1e-9
            assert rel_err(qr_b, qr_d) < 1e-9

    def test_random_draws_match_oracle(self):
        rng = np.random.default_rng(2024)
        kinds = ("dft", "m1", "random")
        for draw in range(50):
            m, n = (int(v) for v in rng.integers(2, 13, size=2))
            p = int(rng.integers(2, 5))
            s = int(rng.integers(1, min(m, n) + 1))
            ctx = make_context(kinds[draw % 3], p)
            A = random_tensor(rng, m, n, p)
            W = _weight(rng, ctx, m, n, s)
            expected = oracle.outer_via_mat(A, W, ctx)
            qr_b = outer_inverse_qr(A, W, ctx)
            qr_d = outer_inverse_qr(A, W, ctx, variant=OuterVariant.QR_D)
            assert rel_err(qr_b, expected) < 1e-9, (draw, m, n, p, s)
            assert rel_err(qr_d, expected) < 1e-9, (draw, m, n, p, s)
            assert rel_err(qr_b, qr_d) < 1e-9

    def test_products_are_projectors(self, rng, ctx3):
        A = random_tensor(rng, 6, 5, 3)
        X = outer_inverse_qr(A, _weight(rng, ctx3, 6, 5, 3), ctx3)
        AX, XA = m_product(A, X, ctx3), m_product(X, A, ctx3)
        assert rel_err(m_product(AX, AX, ctx3), AX) < 1e-9
        assert rel_err(m_product(XA, XA, ctx3), XA) < 1e-9

    def test_full_rank_variant(self, rng, ctx3):
        A = random_tensor(rng, 5, 4, 3)
        W = _weight(rng, ctx3, 5, 4, 2)
        X = outer_inverse_qr(A, W, ctx3, variant=OuterVariant.FULL_RANK_BC)
        assert rel_err(X, outer_inverse_qr(A, W, ctx3)) < 1e-9
        pair = full_rank_decomposition(W, ctx3)
        assert rel_err(outer_inverse_full_rank(A, pair.B, pair.C, ctx3), X) < 1e-9

    def test_outer_inverse_properties(self, rng, ctx3):
        A = random_tensor(rng, 5, 4, 3)
        W = _weight(rng, ctx3, 5, 4, 2)
        X = outer_inverse_qr(A, W, ctx3)
        assert fro_norm(X - m_product(m_product(X, A, ctx3), X, ctx3)) < 1e-9 * fro_norm(X)
        # range of X is the range of W: X A W = W
        assert fro_norm(m_product(m_product(X, A, ctx3), W, ctx3) - W) < 1e-9 * fro_norm(W)
        # kernel of X is the kernel of W: W A X = W
        assert fro_norm(m_product(m_product(W, A, ctx3), X, ctx3) - W) < 1e-9 * fro_norm(W)

    def test_invertible_with_identity_weight(self, rng, ctx3):
        A = random_tensor(rng, 4, 4, 3)
        X = outer_inverse_qr(A, identity_tensor(4, ctx3), ctx3)
        assert rel_err(X, m_inverse(A, ctx3)) < 1e-9

    def test_solve_request(self, rng, ctx3):
        A = random_tensor(rng, 4, 3, 3)
        W = _weight(rng, ctx3, 4, 3, 2)
        request = OuterInverseRequest(A=A, W=W, variant=OuterVariant.QR_D)
        assert rel_err(solve_request(request, ctx3), outer_inverse_qr(A, W, ctx3)) < 1e-9

    def test_wrong_weight_shape(self, rng, ctx3):
        with pytest.raises(DimensionMismatchError):
            outer_inverse_qr(random_tensor(rng, 4, 3, 3), random_tensor(rng, 4, 3, 3), ctx3)

    def test_existence_failure(self, ctx3):
        # W A = 0 while W != 0: the kernel condition cannot hold
        e1 = np.zeros((3, 3))
        e1[0, 0] = 1.0
        e2 = np.zeros((3, 3))
        e2[1, 1] = 1.0
        A = unhat(np.stack([e1] * 3), ctx3)
        W = unhat(np.stack([e2] * 3), ctx3)
        with pytest.raises(OuterInverseNotExistError):
            check_existence(A, W, ctx3)
        with pytest.raises(OuterInverseNotExistError):
            outer_inverse_qr(A, W, ctx3)

    def test_zero_weight(self, rng, ctx3):
        A = random_tensor(rng, 3, 3, 3)
        with pytest.raises(EmptyRankError):
            outer_inverse_qr(A, Tensor3.zeros(3, 3, 3), ctx3, check=False)

    def test_non_uniform_weight(self, rng, ctx3):
        A = random_tensor(rng, 3, 3, 3)
        W = unhat(np.stack([np.eye(3), np.diag([1.0, 1.0, 0.0]), np.eye(3)]), ctx3)
        with pytest.raises(NonUniformRankError):
            outer_inverse_qr(A, W, ctx3, check=False)


class TestMoorePenrose:
    @pytest.mark.parametrize("dims", [(6, 4), (4, 6), (5, 5)])
    def test_matches_oracle(self, rng, ctx3, dims):
        m, n = dims
        A = random_tensor(rng, m, n, 3)
        assert rel_err(moore_penrose_qr(A, ctx3), oracle.oracle_pinv(A, ctx3)) < 1e-9

    def test_penrose_equations(self, rng, ctx3):
        A = m_product(random_tensor(rng, 6, 3, 3), random_tensor(rng, 3, 5, 3), ctx3)
        X = moore_penrose_qr(A, ctx3)
        report = residual_report(A, X, InverseKind.MP, ctx3)
        norm_a = fro_norm(A)
        assert report.E1 <= 1e-8 * norm_a
        assert report.E2 <= 1e-8 * norm_a
        AX = m_product(A, X, ctx3)
        assert report.E3 <= 1e-8 * fro_norm(AX)
        assert report.E4 <= 1e-8 * fro_norm(AX)
        assert report.E5 is None and report.E1k is None

    def test_hermitian_projectors(self, rng, ctx3):
        A = random_tensor(rng, 5, 3, 3)
        X = moore_penrose_qr(A, ctx3)
        assert oracle.is_hermitian(m_product(A, X, ctx3), ctx3, rtol=1e-9)
        assert oracle.is_hermitian(m_product(X, A, ctx3), ctx3, rtol=1e-9)

    def test_penrose_suite_on_chow(self):
        for kind in ("dft", "m1", "random"):
            ctx = make_context(kind, 4)
            A = build_tensor(GeneratorSpec(family=Family.CHOW, dims=(8, 8, 4)), ctx)
            report = residual_report(A, moore_penrose_qr(A, ctx), InverseKind.MP, ctx)
            assert report.E1 <= 1e-8 * fro_norm(A)
            assert report.E2 <= 1e-8 * fro_norm(A)


class TestDrazin:
    def test_index_one_matches_oracle(self, ctx3):
        S = gen_random_index1(5, 3, 2, seed=8, ctx=ctx3)
        assert rel_err(drazin_qr(S, ctx3), oracle.oracle_drazin(S, ctx3)) < 1e-9

    def test_group_inverse(self, ctx3):
        S = gen_random_index1(4, 3, 2, seed=9, ctx=ctx3)
        X = group_inverse_qr(S, ctx3)
        report = residual_report(S, X, InverseKind.GROUP, ctx3, k=1)
        scale = fro_norm(X)
        assert report.E1k <= 1e-9 * fro_norm(S) * scale
        assert report.E2 <= 1e-8 * scale**2 * fro_norm(S)
        assert report.E5 <= 1e-9 * fro_norm(S) * scale

    def test_group_inverse_needs_index_one(self, rng, ctx3):
        with pytest.raises(IndexNotOneError) as info:
            group_inverse_qr(random_tensor(rng, 3, 3, 3), ctx3)
        assert info.value.index == 0

    def test_higher_index(self, ctx3):
        # hat slices c * diag(J, 1) with a nilpotent 2x2 block J: index 2,
        # and the Drazin inverse has hat slices diag(0, 0, 1/c)
        block = np.zeros((3, 3))
        block[0, 1] = 1.0
        block[2, 2] = 1.0
        A = unhat(np.stack([block, 2 * block, block]), ctx3)
        X = drazin_qr(A, ctx3)
        expected = oracle.oracle_drazin(A, ctx3)
        assert rel_err(X, expected) < 1e-9
        report = residual_report(A, X, InverseKind.DRAZIN, ctx3, k=2)
        assert report.E1k < 1e-9 and report.E2 < 1e-9 and report.E5 < 1e-9

    def test_power_above_index(self, ctx3):
        S = gen_random_index1(4, 3, 2, seed=10, ctx=ctx3)
        assert rel_err(drazin_qr(S, ctx3, k=3), drazin_qr(S, ctx3)) < 1e-8

    def test_power_below_index(self, ctx3):
        S = gen_random_index1(4, 3, 2, seed=10, ctx=ctx3)
        with pytest.raises(ValueError):
            drazin_qr(S, ctx3, k=0)

    def test_invertible_gives_inverse(self, rng, ctx3):
        A = random_tensor(rng, 4, 4, 3)
        assert rel_err(drazin_qr(A, ctx3), m_inverse(A, ctx3)) < 1e-9

    def test_drazin_report_shape(self, ctx3):
        A = build_tensor(GeneratorSpec(family=Family.GEARMAT, dims=(6, 6, 3)), ctx3)
        report = residual_report(A, drazin_qr(A, ctx3), InverseKind.DRAZIN, ctx3, k=1)
        assert report.E1k is not None and report.E2 is not None and report.E5 is not None
        assert report.E3 is None and report.E4 is None

    @pytest.mark.parametrize("kind", ["dft", "m1", "random"])
    @pytest.mark.parametrize("p", [2, 4])
    @pytest.mark.parametrize("n", [10, 20])
    def test_gearmat_suite(self, n, p, kind):
        ctx = make_context(kind, p)
        A = build_tensor(GeneratorSpec(family=Family.GEARMAT, dims=(n, n, p)), ctx)
        k = index_m(A, ctx)
        X = drazin_qr(A, ctx, k=k)
        report = residual_report(A, X, InverseKind.DRAZIN, ctx, k=k)
        norm_a, norm_x = fro_norm(A), fro_norm(X)
        assert report.E1k <= 1e-8 * fro_norm(m_power(A, k + 1, ctx)) * norm_x
        assert report.E2 <= 1e-8 * norm_x**2 * norm_a
        assert report.E5 <= 1e-8 * norm_a * norm_x


class TestZeroInverse:
    def test_shape(self):
        assert zero_inverse(Tensor3.zeros(3, 2, 4)).dims == (2, 3, 4)
