from loguru import logger

from ..core.errors import EmptyRankError, IndexNotOneError
from ..tensor.outer_inverse import (
    InverseKind,
    drazin_qr,
    moore_penrose_qr,
    outer_inverse_qr,
    zero_inverse,
)
from ..tensor.tensor_core import MTensorContext, index_m
from ..tensor.transform import Tensor3
from .base import InverseSolverInterface, SolveOptions, SolverResult


class MQRSolver(InverseSolverInterface):
    """Direct outer inverses through the pivoted M-QR factorization."""

    name = "mqr"

    def __init__(self, variant: str = "qr_b"):
        self.variant = variant
        logger.debug(f"MQRSolver initialized with variant {variant}")

    def _solve(self, A: Tensor3, ctx: MTensorContext, options: SolveOptions) -> SolverResult:
        kind = options.kind
        k = options.k
        try:
            if kind == InverseKind.MP:
                X = moore_penrose_qr(A, ctx)
            elif kind == InverseKind.DRAZIN:
                k = index_m(A, ctx) if k is None else k
                X = drazin_qr(A, ctx, k=k)
            elif kind == InverseKind.GROUP:
                k = index_m(A, ctx)
                if k != 1:
                    raise IndexNotOneError(k)
                X = drazin_qr(A, ctx, k=1)
            else:
                if options.W is None:
                    raise ValueError("Outer inverse needs W")
                X = outer_inverse_qr(A, options.W, ctx, variant=self.variant)
        except EmptyRankError:
            logger.info("mqr: W has slice rank 0, the outer inverse is the zero tensor")
            X = zero_inverse(A)
        return SolverResult(X=X, k=k)
