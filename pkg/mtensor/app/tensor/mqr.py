"""Column-pivoted M-QR decomposition, rank detection and full-rank factorizations."""

from typing import Optional, Tuple

import numpy as np
import scipy.linalg
from loguru import logger
from pydantic import BaseModel, ConfigDict

from ..config import settings
from ..core.errors import EmptyRankError, NonUniformRankError
from .tensor_core import MTensorContext, hat, unhat
from .transform import Tensor3


class MQrFactors(BaseModel):
    """W *_M P = Q *_M R, with the hat-domain stacks kept for truncation."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    Q: Tensor3
    R: Tensor3
    P: Tensor3
    slice_rank: int
    tol_used: float
    context: MTensorContext
    hat_q: np.ndarray
    hat_r: np.ndarray
    hat_p: np.ndarray


class FullRankPair(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    B: Tensor3
    C: Tensor3


def detect_uniform_rank(R_hat: np.ndarray, tol: float) -> int:
    """Common numerical rank of pivoted R slices: count of |r_jj| > tol * |r_11|."""
    ranks = []
    for R_i in R_hat:
        diag = np.abs(np.diagonal(R_i))
        if diag.size == 0 or diag[0] == 0:
            ranks.append(0)
        else:
            ranks.append(int(np.count_nonzero(diag > tol * diag[0])))
    if len(set(ranks)) > 1:
        raise NonUniformRankError(ranks)
    return ranks[0] if ranks else 0


def mqr_decompose(W: Tensor3, ctx: MTensorContext, tol: Optional[float] = None) -> MQrFactors:
    tol = settings.numerics.qr_rank_tol if tol is None else tol
    n, m, p = W.dims
    W_hat = hat(W, ctx)

    hat_q = np.empty((p, n, n), dtype=np.complex128)
    hat_r = np.empty((p, n, m), dtype=np.complex128)
    hat_p = np.zeros((p, m, m), dtype=np.complex128)
    identity = np.eye(m)
    for i in range(p):
        q_i, r_i, piv = scipy.linalg.qr(W_hat[i], pivoting=True)
        hat_q[i], hat_r[i] = q_i, r_i
        hat_p[i] = identity[:, piv]
        logger.trace(f"M-QR slice {i}: pivots {piv.tolist()}")

    s = detect_uniform_rank(hat_r, tol)
    logger.debug(f"M-QR of {W.dims} tensor: slice rank s={s} (tol={tol:.1e})")
    return MQrFactors(
        Q=unhat(hat_q, ctx),
        R=unhat(hat_r, ctx),
        P=unhat(hat_p, ctx),
        slice_rank=s,
        tol_used=tol,
        context=ctx,
        hat_q=hat_q,
        hat_r=hat_r,
        hat_p=hat_p,
    )


def truncated_hat(F: MQrFactors) -> Tuple[np.ndarray, np.ndarray]:
    """Hat slices of (Q~, R~): the first s columns of Q and the first s rows of R."""
    s = F.slice_rank
    if s == 0:
        raise EmptyRankError("Slice rank is 0; the zero tensor has no full-rank factorization.")
    return F.hat_q[:, :, :s], F.hat_r[:, :s, :]


def truncate(F: MQrFactors) -> Tuple[Tensor3, Tensor3]:
    q_tilde, r_tilde = truncated_hat(F)
    return unhat(q_tilde, F.context), unhat(r_tilde, F.context)


def full_rank_decomposition(
    W: Tensor3, ctx: MTensorContext, tol: Optional[float] = None
) -> FullRankPair:
    """W = B *_M C with B = Q~ and C = R~ *_M P*."""
    F = mqr_decompose(W, ctx, tol)
    q_tilde, r_tilde = truncated_hat(F)
    c_hat = np.matmul(r_tilde, np.conj(np.swapaxes(F.hat_p, 1, 2)))
    return FullRankPair(B=unhat(q_tilde, ctx), C=unhat(c_hat, ctx))
