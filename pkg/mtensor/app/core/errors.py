from typing import List, Optional


class MTensorError(Exception):
    """Base class for every error raised by the mtensor library."""


class DimensionMismatchError(MTensorError, ValueError):
    pass


class SingularTransformError(MTensorError):
    """The transform matrix M is numerically singular or its inverse is inconsistent."""


class SingularSliceError(MTensorError):
    def __init__(self, index: int, message: Optional[str] = None):
        self.index = index
        super().__init__(message or f"Hat slice {index} is numerically singular.")


class NonUniformRankError(MTensorError):
    def __init__(self, ranks: List[int]):
        self.ranks = list(ranks)
        super().__init__(f"Hat slices have differing numerical ranks: {self.ranks}")


class EmptyRankError(MTensorError):
    """Slice rank is zero, so there is no full-rank factorization to truncate."""


class OuterInverseNotExistError(MTensorError):
    pass


class IndexNotOneError(MTensorError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"Group inverse requires index 1, got index {index}.")


class ZeroTensorError(MTensorError):
    pass


class DivergedError(MTensorError):
    def __init__(self, iteration: int, history: Optional[List[float]] = None):
        self.iteration = iteration
        self.history = list(history or [])
        super().__init__(f"Hyperpower iteration diverged at iteration {iteration}.")


class GeneratorError(MTensorError):
    pass


class SolverLoadError(MTensorError):
    pass
