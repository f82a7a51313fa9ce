"""Outer inverses with prescribed range and kernel, and the Moore-Penrose,
Drazin and group inverses obtained from them.

The QR path follows the pivoted M-QR factorization of W:

    qr_b:  X = Q~ (R~ P* A Q~)^{-1} R~ P*
    qr_d:  X = Q~ (Q~* W A Q~)^{-1} Q~* W

Both are evaluated slice-wise in the hat domain.
"""

from enum import Enum
from typing import Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict

from ..config import settings
from ..core.errors import (
    DimensionMismatchError,
    IndexNotOneError,
    OuterInverseNotExistError,
    SingularSliceError,
)
from .mqr import full_rank_decomposition, mqr_decompose, truncated_hat
from .tensor_core import (
    MTensorContext,
    ranks_from_hat,
    conj_transpose,
    fro_norm,
    hat,
    identity_tensor,
    index_m,
    invert_slices,
    m_power,
    m_product,
    unhat,
)
from .transform import Tensor3


class OuterVariant(str, Enum):
    QR_B = "qr_b"
    QR_D = "qr_d"
    FULL_RANK_BC = "full_rank_bc"


class InverseKind(str, Enum):
    MP = "mp"
    DRAZIN = "drazin"
    GROUP = "group"
    OUTER = "outer"


class OuterInverseRequest(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    A: Tensor3
    W: Tensor3
    variant: OuterVariant = OuterVariant.QR_B
    tol: Optional[float] = None


class ResidualReport(BaseModel):
    E1: Optional[float] = None
    E2: Optional[float] = None
    E3: Optional[float] = None
    E4: Optional[float] = None
    E5: Optional[float] = None
    E1k: Optional[float] = None
    iterations: Optional[int] = None
    ttp_count: Optional[int] = None


def _ct(stack: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(stack, 1, 2))


def _invert_core(core_hat: np.ndarray) -> np.ndarray:
    try:
        return invert_slices(core_hat)
    except SingularSliceError as e:
        raise OuterInverseNotExistError(
            f"Core tensor is singular in hat slice {e.index}; no outer inverse with the "
            "prescribed range and kernel exists."
        ) from e


def check_existence(A: Tensor3, W: Tensor3, ctx: MTensorContext, tol: Optional[float] = None):
    """rank_m(W *_M A) == rank_m(W) <= rank_m(A), evaluated on hat slices.

    Ranks are counted with the M-QR cut-off ``numerics.qr_rank_tol``.
    """
    tol = settings.numerics.qr_rank_tol if tol is None else tol
    A_hat, W_hat = hat(A, ctx), hat(W, ctx)
    rank_wa = sum(ranks_from_hat(np.matmul(W_hat, A_hat), tol))
    rank_w = sum(ranks_from_hat(W_hat, tol))
    rank_a = sum(ranks_from_hat(A_hat, tol))
    logger.debug(f"Existence ranks: rank(WA)={rank_wa}, rank(W)={rank_w}, rank(A)={rank_a}")
    if rank_wa != rank_w or rank_w > rank_a:
        raise OuterInverseNotExistError(
            f"rank_m(WA)={rank_wa}, rank_m(W)={rank_w}, rank_m(A)={rank_a}: "
            "no outer inverse with range R(W) and kernel N(W)"
        )


def _check_shapes(A: Tensor3, W: Tensor3):
    m, n, p = A.dims
    if W.dims != (n, m, p):
        raise DimensionMismatchError(f"W must be {(n, m, p)} for A of dims {A.dims}, got {W.dims}")


def outer_inverse_qr(
    A: Tensor3,
    W: Tensor3,
    ctx: MTensorContext,
    tol: Optional[float] = None,
    variant: OuterVariant = OuterVariant.QR_B,
    check: bool = True,
) -> Tensor3:
    variant = OuterVariant(variant)
    _check_shapes(A, W)
    if check:
        check_existence(A, W, ctx, tol)

    if variant == OuterVariant.FULL_RANK_BC:
        pair = full_rank_decomposition(W, ctx, tol)
        return outer_inverse_full_rank(A, pair.B, pair.C, ctx)

    F = mqr_decompose(W, ctx, tol)
    q_tilde, r_tilde = truncated_hat(F)
    A_hat = hat(A, ctx)

    if variant == OuterVariant.QR_B:
        left = np.matmul(r_tilde, _ct(F.hat_p))
    else:
        left = np.matmul(_ct(q_tilde), hat(W, ctx))

    core = np.matmul(np.matmul(left, A_hat), q_tilde)
    X_hat = np.matmul(q_tilde, np.matmul(_invert_core(core), left))
    logger.debug(f"Outer inverse ({variant.value}) computed with s={F.slice_rank}")
    return unhat(X_hat, ctx)


def solve_request(request: OuterInverseRequest, ctx: MTensorContext) -> Tensor3:
    return outer_inverse_qr(request.A, request.W, ctx, request.tol, request.variant)


def outer_inverse_full_rank(A: Tensor3, B: Tensor3, C: Tensor3, ctx: MTensorContext) -> Tensor3:
    """X = B (C A B)^{-1} C, the outer inverse with range R(B) and kernel N(C)."""
    m, n, _ = A.dims
    if B.dims[0] != n or C.dims[1] != m or B.dims[1] != C.dims[0]:
        raise DimensionMismatchError(
            f"Full-rank pair B{B.dims}, C{C.dims} does not fit A{A.dims}"
        )
    B_hat, C_hat = hat(B, ctx), hat(C, ctx)
    core = np.matmul(np.matmul(C_hat, hat(A, ctx)), B_hat)
    return unhat(np.matmul(B_hat, np.matmul(_invert_core(core), C_hat)), ctx)


def zero_inverse(A: Tensor3) -> Tensor3:
    """The generalized inverse of the zero tensor: zeros of transposed shape."""
    m, n, p = A.dims
    return Tensor3.zeros(n, m, p)


def moore_penrose_qr(A: Tensor3, ctx: MTensorContext, tol: Optional[float] = None) -> Tensor3:
    return outer_inverse_qr(A, conj_transpose(A, ctx), ctx, tol)


def drazin_qr(
    A: Tensor3, ctx: MTensorContext, tol: Optional[float] = None, k: Optional[int] = None
) -> Tensor3:
    """Drazin inverse as the outer inverse with W = A^k, k >= ind(A)."""
    index = index_m(A, ctx)
    if k is None:
        k = index
    elif k < index:
        raise ValueError(f"Power k={k} is below the index {index}")
    logger.debug(f"Drazin inverse with k={k} (index {index})")
    W = identity_tensor(A.dims[0], ctx) if k == 0 else m_power(A, k, ctx)
    return outer_inverse_qr(A, W, ctx, tol)


def group_inverse_qr(A: Tensor3, ctx: MTensorContext, tol: Optional[float] = None) -> Tensor3:
    index = index_m(A, ctx)
    if index != 1:
        raise IndexNotOneError(index)
    return outer_inverse_qr(A, A, ctx, tol)


def residual_report(
    A: Tensor3,
    X: Tensor3,
    kind: InverseKind,
    ctx: MTensorContext,
    k: int = 1,
) -> ResidualReport:
    """Residual norms of the defining equations relevant to ``kind``."""
    kind = InverseKind(kind)
    AX = m_product(A, X, ctx)
    XA = m_product(X, A, ctx)
    E2 = fro_norm(X - m_product(XA, X, ctx))

    if kind == InverseKind.MP:
        return ResidualReport(
            E1=fro_norm(A - m_product(AX, A, ctx)),
            E2=E2,
            E3=fro_norm(AX - conj_transpose(AX, ctx)),
            E4=fro_norm(XA - conj_transpose(XA, ctx)),
        )
    if kind in (InverseKind.DRAZIN, InverseKind.GROUP):
        A_k = m_power(A, k, ctx)
        E1k = fro_norm(m_product(X, m_product(A_k, A, ctx), ctx) - A_k)
        return ResidualReport(E1k=E1k, E2=E2, E5=fro_norm(AX - XA))
    return ResidualReport(E2=E2)
