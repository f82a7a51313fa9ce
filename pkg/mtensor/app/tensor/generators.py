"""Deterministic experiment tensors: structured gallery slices, random families
and the two small worked examples."""

from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from ..config import settings
from ..core.errors import GeneratorError
from .tensor_core import MTensorContext, index_m, slice_ranks, unhat
from .transform import Tensor3


class Family(str, Enum):
    CHOW = "chow"
    GEARMAT = "gearmat"
    CYCOL = "cycol"
    RANDOM_DENSE = "random_dense"
    RANDOM_INDEX1 = "random_index1"
    EXAMPLE_4_1 = "example_4_1"
    EXAMPLE_4_2 = "example_4_2"


class GeneratorSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: Family
    dims: Tuple[int, int, int]
    params: Dict[str, Any] = Field(default_factory=dict)
    seed: int = 0


def gen_chow(n: int, alpha: float = 1.0, delta: float = 0.0) -> np.ndarray:
    """Lower Hessenberg chow matrix: a[i, j] = alpha^(i-j+1) for j <= i+1, plus delta*I."""
    if n < 1:
        raise GeneratorError(f"chow order must be positive, got {n}")
    i, j = np.indices((n, n))
    power = i - j + 1
    A = np.where(power >= 0, float(alpha) ** np.maximum(power, 0), 0.0)
    return A + delta * np.eye(n)


def gen_gearmat(n: int, i: Optional[int] = None, j: Optional[int] = None) -> np.ndarray:
    """Gear matrix: ones on both off-diagonals, corners written last."""
    i = n if i is None else i
    j = -n if j is None else j
    if n < 1:
        raise GeneratorError(f"gearmat order must be positive, got {n}")
    if not (1 <= abs(i) <= n and 1 <= abs(j) <= n):
        raise GeneratorError(f"gearmat parameters out of range: i={i}, j={j}, n={n}")
    A = np.eye(n, k=1) + np.eye(n, k=-1)
    A[0, abs(i) - 1] = np.sign(i)
    A[n - 1, n - abs(j)] = np.sign(j)
    return A


def gen_cycol(m: int, n: int, k: int, seed: int) -> np.ndarray:
    """First k columns Gaussian, the rest repeat them cyclically."""
    if not 1 <= k <= n:
        raise GeneratorError(f"cycol period must satisfy 1 <= k <= n, got k={k}, n={n}")
    base = np.random.default_rng(seed).standard_normal((m, k))
    return base[:, np.arange(n) % k]


def gen_random_dense(m: int, n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal((m, n))


def gen_random_index1(n: int, p: int, s: int, seed: int, ctx: MTensorContext) -> Tensor3:
    """Tensor whose hat slices are X diag(d, 0) X^{-1} with rank s, so the index is 1."""
    if n < 2:
        raise GeneratorError("An index-1 tensor needs slices of order at least 2")
    if not 1 <= s <= n:
        raise GeneratorError(f"Slice rank must satisfy 1 <= s <= n, got s={s}")
    if s == n:
        logger.warning(f"Slice rank s={n} gives an invertible tensor (index 0); using s={n - 1}")
        s = n - 1

    gate = settings.generators.cond_gate
    rng = np.random.default_rng(seed)
    for attempt in range(1, settings.generators.max_resample + 1):
        X = rng.standard_normal((p, n, n))
        d = rng.uniform(0.5, 2.0, size=(p, s)) * rng.choice([-1.0, 1.0], size=(p, s))
        if max(np.linalg.cond(X_i) for X_i in X) > gate:
            logger.warning(f"index1 generator attempt {attempt}: conditioning gate failed, resampling")
            continue
        diag = np.zeros((p, n, n))
        diag[:, np.arange(s), np.arange(s)] = d
        slices = X @ diag @ np.linalg.inv(X)
        A = unhat(slices, ctx)
        if set(slice_ranks(A, ctx, settings.numerics.qr_rank_tol)) == {s} and index_m(A, ctx) == 1:
            return A
        logger.warning(f"index1 generator attempt {attempt}: rank/index check failed, resampling")
    raise GeneratorError(f"No index-1 tensor after {settings.generators.max_resample} attempts")


def gen_example_4_1() -> Tensor3:
    return Tensor3.from_slices(
        [
            [[-1, -1], [0, 1]],
            [[1, 0], [0, -1]],
            [[1, -1], [-1, 0]],
            [[-1, 1], [1, 1]],
        ]
    )


def gen_example_4_2() -> Tensor3:
    return Tensor3.from_slices(
        [
            [[1, -1, -1], [1, 1, 1], [-1, 1, 1]],
            [[1, 0, 0], [0, 0, 0], [0, 0, 0]],
            [[1, 1, 1], [-1, -1, -1], [0, 0, 0]],
        ]
    )


def _scaled_stack(G: np.ndarray, p: int) -> Tensor3:
    # slice k is 2^-k G, so every hat slice is a nonzero multiple of G
    return Tensor3(G[None, :, :] * (0.5 ** np.arange(p))[:, None, None])


def build_tensor(spec: GeneratorSpec, ctx: MTensorContext) -> Tensor3:
    m, n, p = spec.dims
    params = spec.params
    family = spec.family
    logger.debug(f"Generating {family.value} tensor dims={spec.dims} seed={spec.seed} params={params}")

    if family == Family.CHOW:
        return _scaled_stack(gen_chow(n, params.get("alpha", 1.0), params.get("delta", 0.0)), p)
    if family == Family.GEARMAT:
        return _scaled_stack(gen_gearmat(n, params.get("i"), params.get("j")), p)
    if family == Family.CYCOL:
        k = params.get("period", max(1, n // 2))
        return Tensor3.from_slices([gen_cycol(m, n, k, spec.seed + i) for i in range(p)])
    if family == Family.RANDOM_DENSE:
        return Tensor3.from_slices([gen_random_dense(m, n, spec.seed + i) for i in range(p)])
    if family == Family.RANDOM_INDEX1:
        return gen_random_index1(n, p, params.get("slice_rank", max(1, n // 2)), spec.seed, ctx)
    if family == Family.EXAMPLE_4_1:
        return gen_example_4_1()
    if family == Family.EXAMPLE_4_2:
        return gen_example_4_2()
    raise GeneratorError(f"Unknown family {family}")
