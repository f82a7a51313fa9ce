from abc import ABC, abstractmethod
from typing import Optional

from loguru import logger
from pydantic import BaseModel, ConfigDict

from ..tensor.hyperpower import Hpi19Coefficients, StopRule
from ..tensor.outer_inverse import InverseKind, zero_inverse
from ..tensor.tensor_core import MTensorContext, fro_norm
from ..tensor.transform import Tensor3


class SolveOptions(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: InverseKind = InverseKind.MP
    W: Optional[Tensor3] = None
    k: Optional[int] = None
    tol: Optional[float] = None
    max_iters: Optional[int] = None
    gamma: Optional[float] = None
    stop: StopRule = StopRule.STEP
    coeffs: Optional[Hpi19Coefficients] = None


class SolverResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    X: Tensor3
    k: Optional[int] = None
    iterations: int = 0
    ttp_count: int = 0
    converged: bool = True
    gamma: Optional[float] = None


class InverseSolverInterface(ABC):
    name: str = "base"

    def solve(self, A: Tensor3, ctx: MTensorContext, options: SolveOptions) -> SolverResult:
        if fro_norm(A) == 0:
            logger.info(f"{self.name}: zero input, returning the zero tensor of transposed shape")
            return SolverResult(X=zero_inverse(A), k=options.k)
        return self._solve(A, ctx, options)

    @abstractmethod
    def _solve(self, A: Tensor3, ctx: MTensorContext, options: SolveOptions) -> SolverResult:
        pass
