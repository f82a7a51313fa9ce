"""M-product algebra on third-order tensors.

Every operation moves to the hat domain, works on the p frontal slices as a
batched stack of dense matrices and moves back.
"""

import threading
from typing import List, Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict

from ..config import settings
from ..core.errors import DimensionMismatchError, SingularSliceError
from .transform import Tensor3, TransformSpec, from_hat, to_hat

EPS = np.finfo(np.float64).eps


class MTensorContext(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    transform: TransformSpec

    @property
    def p(self) -> int:
        return self.transform.size

    def check(self, *tensors: Tensor3):
        for A in tensors:
            if A.dims[2] != self.p:
                raise DimensionMismatchError(
                    f"Tensor {A.dims} does not fit a context with p={self.p}"
                )


class TTPCounter:
    """Counts tensor-tensor products. Safe to share between threads."""

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def increment(self, n: int = 1):
        with self._lock:
            self._count += n

    def reset(self):
        with self._lock:
            self._count = 0

    @property
    def value(self) -> int:
        with self._lock:
            return self._count


def hat(A: Tensor3, ctx: MTensorContext) -> np.ndarray:
    """Hat-domain slices of ``A`` as a ``(p, m, n)`` array."""
    ctx.check(A)
    return to_hat(A, ctx.transform).data


def unhat(slices: np.ndarray, ctx: MTensorContext) -> Tensor3:
    return from_hat(Tensor3(slices), ctx.transform)


def _eye_stack(m: int, p: int) -> np.ndarray:
    return np.broadcast_to(np.eye(m, dtype=np.complex128), (p, m, m)).copy()


def m_product(
    A: Tensor3, B: Tensor3, ctx: MTensorContext, counter: Optional[TTPCounter] = None
) -> Tensor3:
    if A.dims[1] != B.dims[0]:
        raise DimensionMismatchError(f"Inner dimensions disagree: {A.dims} *_M {B.dims}")
    C_hat = np.matmul(hat(A, ctx), hat(B, ctx))
    if counter is not None:
        counter.increment()
    return unhat(C_hat, ctx)


def conj_transpose(A: Tensor3, ctx: MTensorContext) -> Tensor3:
    return unhat(np.conj(np.swapaxes(hat(A, ctx), 1, 2)), ctx)


def identity_tensor(m: int, ctx: MTensorContext) -> Tensor3:
    return unhat(_eye_stack(m, ctx.p), ctx)


def _require_square(A: Tensor3, op: str):
    m, n, _ = A.dims
    if m != n:
        raise DimensionMismatchError(f"{op} needs square frontal slices, got {m}x{n}")


def singular_values(A_hat: np.ndarray) -> np.ndarray:
    """Batched singular values of hat slices, shape ``(p, min(m, n))``, descending."""
    if min(A_hat.shape[1:]) == 0:
        return np.zeros((A_hat.shape[0], 0))
    return np.linalg.svd(A_hat, compute_uv=False)


def invert_slices(A_hat: np.ndarray, gate: Optional[float] = None) -> np.ndarray:
    """Slice-wise inverse of a ``(p, m, m)`` stack; raises ``SingularSliceError`` on the first bad slice."""
    gate = settings.numerics.nonsingular_gate if gate is None else gate
    p, m, _ = A_hat.shape
    if m == 0:
        raise SingularSliceError(0, "Cannot invert empty hat slices.")
    for i, s in enumerate(singular_values(A_hat)):
        if s[0] == 0 or s[-1] <= gate * s[0]:
            logger.debug(f"Hat slice {i} fails nonsingularity gate (sigma={s[-1]:.3e}/{s[0]:.3e})")
            raise SingularSliceError(i)
    return np.linalg.solve(A_hat, _eye_stack(m, p))


def m_inverse(A: Tensor3, ctx: MTensorContext, gate: Optional[float] = None) -> Tensor3:
    _require_square(A, "m_inverse")
    return unhat(invert_slices(hat(A, ctx), gate), ctx)


def m_power(A: Tensor3, k: int, ctx: MTensorContext) -> Tensor3:
    _require_square(A, "m_power")
    if k < 0:
        raise ValueError(f"Power must be non-negative, got {k}")
    return unhat(np.linalg.matrix_power(hat(A, ctx), k), ctx)


def fro_norm(A: Tensor3) -> float:
    return float(np.linalg.norm(A.data))


def ranks_from_hat(A_hat: np.ndarray, tol: Optional[float]) -> List[int]:
    m, n = A_hat.shape[1:]
    if tol is None:
        tol = settings.numerics.rank_tol
    if tol is None:
        tol = max(m, n) * EPS
    ranks = []
    for s in singular_values(A_hat):
        if s.size == 0 or s[0] == 0:
            ranks.append(0)
        else:
            ranks.append(int(np.count_nonzero(s > tol * s[0])))
    return ranks


def slice_ranks(A: Tensor3, ctx: MTensorContext, tol: Optional[float] = None) -> List[int]:
    """Numerical rank of every hat slice; ``tol`` is relative to each slice's largest singular value."""
    return ranks_from_hat(hat(A, ctx), tol)


def rank_m(A: Tensor3, ctx: MTensorContext, tol: Optional[float] = None) -> int:
    return sum(slice_ranks(A, ctx, tol))


def index_m(A: Tensor3, ctx: MTensorContext, tol: Optional[float] = None) -> int:
    """Smallest k >= 0 with rank_m(A^k) == rank_m(A^(k+1))."""
    _require_square(A, "index_m")
    tol = settings.numerics.index_rank_tol if tol is None else tol
    m, _, p = A.dims
    A_hat = hat(A, ctx)
    cap = m * p

    power = _eye_stack(m, p)
    rank_k = m * p
    for k in range(cap + 1):
        power_next = np.matmul(power, A_hat)
        rank_next = sum(ranks_from_hat(power_next, tol))
        logger.trace(f"index_m: rank(A^{k})={rank_k}, rank(A^{k + 1})={rank_next}")
        if rank_next == rank_k:
            return k
        power, rank_k = power_next, rank_next

    logger.warning(f"index_m search reached its cap k={cap} without rank stabilizing")
    return cap
