from typing import Optional

from loguru import logger

from ..core.errors import IndexNotOneError, ZeroTensorError
from ..tensor.hyperpower import SolverConfig, default_gamma, hpi_solve, initial_guess
from ..tensor.outer_inverse import InverseKind, zero_inverse
from ..tensor.tensor_core import MTensorContext, index_m
from ..tensor.transform import Tensor3
from .base import InverseSolverInterface, SolveOptions, SolverResult


class HPISolver(InverseSolverInterface):
    """Hyperpower iteration started from Z0 = gamma * W."""

    method: str = "hpi19"

    def __init__(self, order: Optional[int] = None):
        self.order = order
        logger.debug(f"{type(self).__name__} initialized (method={self.method_name})")

    @property
    def method_name(self) -> str:
        return self.method

    @property
    def name(self) -> str:
        return self.method_name

    def _solve(self, A: Tensor3, ctx: MTensorContext, options: SolveOptions) -> SolverResult:
        kind = options.kind
        k = options.k
        if kind == InverseKind.DRAZIN:
            k = index_m(A, ctx) if k is None else k
        elif kind == InverseKind.GROUP:
            k = index_m(A, ctx)
            if k != 1:
                raise IndexNotOneError(k)

        gamma = options.gamma
        if gamma is None:
            try:
                gamma = default_gamma(A, ctx, kind, k=k, W=options.W)
            except ZeroTensorError:
                # A^(k+1) = 0: nilpotent input, whose Drazin inverse is zero
                logger.info(f"{self.name}: A^(k+1) vanishes, returning the zero tensor")
                return SolverResult(X=zero_inverse(A), k=k)
        Z0 = initial_guess(A, ctx, kind, gamma=gamma, k=k, W=options.W)

        overrides = {"stop": options.stop}
        if options.tol is not None:
            overrides["tol"] = options.tol
        if options.max_iters is not None:
            overrides["max_iters"] = options.max_iters
        if options.coeffs is not None:
            overrides["coeffs"] = options.coeffs
        config = SolverConfig.for_method(self.method_name, **overrides)
        outcome = hpi_solve(A, Z0, ctx, config)
        return SolverResult(
            X=outcome.Z,
            k=k,
            iterations=outcome.iterations,
            ttp_count=outcome.ttp_count,
            converged=outcome.converged,
            gamma=gamma,
        )


class HPI9Solver(HPISolver):
    method = "hpi9"


class HPI19Solver(HPISolver):
    method = "hpi19"


class HPIStandardSolver(HPISolver):
    method = "hpi-std"

    def __init__(self, order: Optional[int] = None):
        super().__init__(order if order is not None else 2)

    @property
    def method_name(self) -> str:
        return f"hpi-std:{self.order}"
