"""Hyperpower iterations for outer inverses.

Three step forms are provided. The standard order-p step evaluates
Z (I + R + ... + R^{p-1}) with R = I - A Z by Horner's rule. The factorized
order-19 and order-9 steps reach the same polynomial with 7 and 5 tensor-tensor
products (TTP). Only *_M products are counted; additions and scalings are free.
"""

import math
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from ..config import settings
from ..core.errors import DivergedError, ZeroTensorError
from .outer_inverse import InverseKind, check_existence
from .tensor_core import (
    MTensorContext,
    TTPCounter,
    conj_transpose,
    fro_norm,
    hat,
    identity_tensor,
    index_m,
    m_power,
    m_product,
    singular_values,
)
from .transform import Tensor3

SQRT93 = math.sqrt(93.0)


class Hpi19Coefficients(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha1: float = 5.0 * (31.0 + SQRT93) / 496.0
    alpha2: float = (3.0 + SQRT93) / 8.0
    alpha3: float = 0.5
    beta1: float = -5.0 * (SQRT93 - 31.0) / 496.0
    beta2: float = (3.0 - SQRT93) / 8.0
    beta3: float = 0.5
    zeta1: float = 3.0 / 8.0
    zeta2: float = 321.0 / 1984.0
    tau1: float = (math.sqrt(27.0 - 2.0 * SQRT93) + 1.0) / 4.0
    tau2: float = (1.0 - math.sqrt(27.0 - 2.0 * SQRT93)) / 4.0
    tau3: float = (5.0 * SQRT93 - 93.0) / 496.0
    xi1: float = (-93.0 - 5.0 * SQRT93) / 496.0
    xi2: float = -SQRT93 / 4.0

    def split_residuals(self) -> List[float]:
        """Residuals of splitting the even degree-16 factor into two octics plus a correction."""
        a1, a2, a3 = self.alpha1, self.alpha2, self.alpha3
        b1, b2, b3 = self.beta1, self.beta2, self.beta3
        return [
            a1 + b1 + self.zeta1 - 1.0,
            a2 + a1 * b1 + b2 + self.zeta2 - 1.0,
            a3 + a2 * b1 + a1 * b2 + b3 - 1.0,
            2.0 + a3 * b1 + a2 * b2 + a1 * b3 - 1.0,
            a1 + b1 + a3 * b2 + a2 * b3 - 1.0,
            a2 + b2 + a3 * b3 - 1.0,
            a3 + b3 - 1.0,
        ]

    def first_octic_residuals(self) -> List[float]:
        t1, t2 = self.tau1, self.tau2
        return [t1 + t2 + self.tau3 - self.alpha1, 2.0 + t1 * t2 - self.alpha2, t1 + t2 - self.alpha3]

    def second_octic_residuals(self) -> List[float]:
        t1, t2 = self.tau1, self.tau2
        return [
            t1 + t2 + self.xi1 - self.beta1,
            2.0 + t1 * t2 + self.xi2 - self.beta2,
            t1 + t2 - self.beta3,
        ]

    def max_residual(self) -> float:
        res = self.split_residuals() + self.first_octic_residuals() + self.second_octic_residuals()
        return max(abs(r) for r in res)


class HpiMethod(str, Enum):
    STANDARD = "hpi-std"
    HPI9 = "hpi9"
    HPI19 = "hpi19"


class StopRule(str, Enum):
    STEP = "step"
    RESIDUAL = "residual"


def parse_method(text: str) -> Tuple[HpiMethod, int]:
    """``hpi9`` -> (HPI9, 9), ``hpi19`` -> (HPI19, 19), ``hpi-std:7`` -> (STANDARD, 7)."""
    text = text.strip().lower()
    if text == HpiMethod.HPI9.value:
        return HpiMethod.HPI9, 9
    if text == HpiMethod.HPI19.value:
        return HpiMethod.HPI19, 19
    if text.startswith(HpiMethod.STANDARD.value):
        _, _, order = text.partition(":")
        try:
            p = int(order) if order else 2
        except ValueError:
            raise ValueError(f"Bad hyperpower order in '{text}'") from None
        if p < 2:
            raise ValueError(f"Hyperpower order must be >= 2, got {p}")
        return HpiMethod.STANDARD, p
    raise ValueError(f"Unknown hyperpower method '{text}'")


class SolverConfig(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    tol: float = Field(default_factory=lambda: settings.solver.tol, gt=0)
    max_iters: int = Field(default_factory=lambda: settings.solver.max_iters, ge=1)
    method: HpiMethod = HpiMethod.HPI19
    order: int = Field(19, ge=2)
    stop: StopRule = StopRule.STEP
    coeffs: Hpi19Coefficients = Field(default_factory=Hpi19Coefficients)
    ttp_counter: TTPCounter = Field(default_factory=TTPCounter)
    check_rank_condition: bool = Field(
        default_factory=lambda: settings.solver.check_rank_condition
    )

    @classmethod
    def for_method(cls, method: str, **kwargs) -> "SolverConfig":
        kind, order = parse_method(method)
        return cls(method=kind, order=order, **kwargs)


class SolveOutcome(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    Z: Tensor3
    iterations: int
    best_iteration: int = 0
    ttp_count: int
    converged: bool
    residual_history: List[float]


def hpi_standard_step(
    A: Tensor3, Z: Tensor3, p: int, ctx: MTensorContext, counter: Optional[TTPCounter] = None
) -> Tensor3:
    if p < 2:
        raise ValueError(f"Hyperpower order must be >= 2, got {p}")
    I = identity_tensor(A.dims[0], ctx)
    R = I - m_product(A, Z, ctx, counter)
    S = I + R
    for _ in range(p - 2):
        S = I + m_product(R, S, ctx, counter)
    return m_product(Z, S, ctx, counter)


def hpi19_step(
    A: Tensor3,
    Z: Tensor3,
    ctx: MTensorContext,
    coeffs: Optional[Hpi19Coefficients] = None,
    counter: Optional[TTPCounter] = None,
) -> Tensor3:
    c = coeffs or Hpi19Coefficients()
    I = identity_tensor(A.dims[0], ctx)
    R = I - m_product(A, Z, ctx, counter)
    R2 = m_product(R, R, ctx, counter)
    R4 = m_product(R2, R2, ctx, counter)
    U = m_product(I + c.tau1 * R2 + R4, I + c.tau2 * R2 + R4, ctx, counter)
    V = U + c.tau3 * R2
    W = U + c.xi1 * R2 + c.xi2 * R4
    inner = m_product(V, W, ctx, counter) + c.zeta1 * R2 + c.zeta2 * R4
    return m_product(Z, I + m_product(R + R2, inner, ctx, counter), ctx, counter)


def hpi9_step(
    A: Tensor3, Z: Tensor3, ctx: MTensorContext, counter: Optional[TTPCounter] = None
) -> Tensor3:
    I = identity_tensor(A.dims[0], ctx)
    R = I - m_product(A, Z, ctx, counter)
    R2 = m_product(R, R, ctx, counter)
    U = 0.875 * R + m_product(R2, 0.5 * R + R2, ctx, counter)
    V = 0.6875 * I - 1.125 * R + 0.75 * R2 + U
    tail = I + (51.0 / 128.0) * R + (39.0 / 32.0) * R2 + m_product(U, V, ctx, counter)
    return m_product(Z, tail, ctx, counter)


def make_step(config: SolverConfig) -> Callable[[Tensor3, Tensor3, MTensorContext], Tensor3]:
    counter = config.ttp_counter
    if config.method == HpiMethod.HPI19:
        return lambda A, Z, ctx: hpi19_step(A, Z, ctx, config.coeffs, counter)
    if config.method == HpiMethod.HPI9:
        return lambda A, Z, ctx: hpi9_step(A, Z, ctx, counter)
    return lambda A, Z, ctx: hpi_standard_step(A, Z, config.order, ctx, counter)


def _guess_base(
    A: Tensor3, ctx: MTensorContext, kind: InverseKind, k: Optional[int], W: Optional[Tensor3]
) -> Tuple[Tensor3, float]:
    """The unscaled Z0 direction and its default scaling gamma."""
    norm_a = fro_norm(A)
    if norm_a == 0:
        raise ZeroTensorError("Initial guess is undefined for the zero tensor")

    if kind == InverseKind.MP:
        return conj_transpose(A, ctx), 1.0 / norm_a**2

    if kind in (InverseKind.DRAZIN, InverseKind.GROUP):
        if k is None:
            k = 1 if kind == InverseKind.GROUP else index_m(A, ctx)
        base = identity_tensor(A.dims[0], ctx) if k == 0 else m_power(A, k, ctx)
        norm_next = fro_norm(m_power(A, k + 1, ctx))
        if norm_next == 0:
            raise ZeroTensorError(f"A^{k + 1} vanishes; no Drazin scaling available")
        return base, 1.0 / norm_next

    if W is None:
        raise ValueError("Outer initial guess needs the W tensor")
    norm_w = fro_norm(W)
    if norm_w == 0:
        raise ZeroTensorError("Initial guess is undefined for a zero W")
    return W, 1.0 / (norm_w * norm_a)


def default_gamma(
    A: Tensor3,
    ctx: MTensorContext,
    kind: InverseKind = InverseKind.MP,
    k: Optional[int] = None,
    W: Optional[Tensor3] = None,
) -> float:
    return _guess_base(A, ctx, InverseKind(kind), k, W)[1]


def hat_spectral_gamma(A: Tensor3, ctx: MTensorContext) -> float:
    """1 / max_i ||A_hat_i||_2^2. With Z = gamma * A^H every eigenvalue of I - A Z lies in [0, 1]."""
    sigma = singular_values(hat(A, ctx))
    top = float(sigma.max()) if sigma.size else 0.0
    if top == 0:
        raise ZeroTensorError("Spectral scaling is undefined for the zero tensor")
    return 1.0 / top**2


def initial_guess(
    A: Tensor3,
    ctx: MTensorContext,
    kind: InverseKind = InverseKind.MP,
    gamma: Optional[float] = None,
    k: Optional[int] = None,
    W: Optional[Tensor3] = None,
) -> Tensor3:
    """Z0 = gamma * A* (mp), gamma * A^k (drazin, group) or gamma * W (outer).

    Default gammas: 1/||A||^2, 1/||A^(k+1)|| and 1/(||W|| ||A||).
    """
    base, g = _guess_base(A, ctx, InverseKind(kind), k, W)
    return (g if gamma is None else gamma) * base


def _is_diverging(history: Sequence[float]) -> bool:
    window = settings.solver.divergence_window
    factor = settings.solver.divergence_factor
    if len(history) <= window:
        return False
    recent = history[-(window + 1):]
    rising = all(b > a for a, b in zip(recent, recent[1:]))
    return rising and recent[-1] > factor * recent[0] and recent[-1] > history[0]


def _at_floor(history: Sequence[float], best: float, best_iteration: int, Z_best: Tensor3) -> bool:
    """The best measure collapsed by plateau_drop and sits below plateau_rtol * max(1, ||Z_best||)."""
    if best_iteration < 2:
        return False
    peak = max(history[: best_iteration - 1])
    floor = settings.solver.plateau_rtol * max(1.0, fro_norm(Z_best))
    return best * settings.solver.plateau_drop <= peak and best <= floor


def hpi_solve(A: Tensor3, Z0: Tensor3, ctx: MTensorContext, config: SolverConfig) -> SolveOutcome:
    """Iterate until the stop measure drops below tol or reaches its rounding floor.

    Past the floor, rounding error on the kernel side of R = I - A Z is amplified by
    the order on every step, so the first rise after the measure collapsed ends the
    loop and the best iterate is returned as converged. A rise without a prior
    collapse is left to the divergence rule.
    """
    m, n, p = A.dims
    if Z0.dims != (n, m, p):
        raise ValueError(f"Initial guess must have dims {(n, m, p)}, got {Z0.dims}")
    if config.check_rank_condition:
        # Z0 is a multiple of W, so rank(Z0 A) == rank(Z0) is the range/kernel condition.
        check_existence(A, Z0, ctx)

    step = make_step(config)
    counter = config.ttp_counter
    start = counter.value
    history: List[float] = []
    Z = Z0
    Z_best, best, best_iteration = Z0, math.inf, 0
    converged = floor_stop = False
    iteration = 0

    logger.debug(
        f"hpi_solve: method={config.method.value}(order {config.order}), "
        f"tol={config.tol:.1e}, max_iters={config.max_iters}, stop={config.stop.value}"
    )
    for iteration in range(1, config.max_iters + 1):
        Z_next = step(A, Z, ctx)
        diff = fro_norm(Z_next - Z)
        Z = Z_next
        if config.stop == StopRule.RESIDUAL:
            measure = fro_norm(Z - m_product(m_product(Z, A, ctx), Z, ctx))
        else:
            measure = diff
        history.append(measure)
        logger.trace(f"iteration {iteration}: {config.stop.value} measure {measure:.3e}")

        if np.isfinite(measure) and measure < best:
            Z_best, best, best_iteration = Z, measure, iteration
        if np.isfinite(measure) and measure < config.tol:
            converged = True
            break
        rose = not np.isfinite(measure) or measure > best
        if rose and _at_floor(history, best, best_iteration, Z_best):
            converged = floor_stop = True
            break
        if not np.isfinite(measure) or _is_diverging(history):
            raise DivergedError(iteration, history)

    ttp = counter.value - start
    if floor_stop:
        Z = Z_best
        logger.debug(
            f"hpi_solve reached its rounding floor {best:.3e} at iteration {best_iteration}; "
            f"stopped after {iteration} iterations ({ttp} TTP)"
        )
    elif converged:
        best_iteration = iteration
        logger.debug(f"hpi_solve converged after {iteration} iterations ({ttp} TTP)")
    else:
        best_iteration = iteration
        logger.warning(
            f"hpi_solve stopped at max_iters={config.max_iters}, last measure {history[-1]:.3e}"
        )
    return SolveOutcome(
        Z=Z,
        iterations=iteration,
        best_iteration=best_iteration,
        ttp_count=ttp,
        converged=converged,
        residual_history=history,
    )


def cei(p: int, n: int) -> float:
    """Computational efficiency index p^(1/n)."""
    if p < 2 or n < 1:
        raise ValueError(f"cei needs p >= 2 and n >= 1, got p={p}, n={n}")
    return p ** (1.0 / n)


def iei(p: int, n: int) -> float:
    """Informational efficiency index p/n."""
    if p < 2 or n < 1:
        raise ValueError(f"iei needs p >= 2 and n >= 1, got p={p}, n={n}")
    return p / n


def efficiency_table(orders: Optional[Sequence[int]] = None) -> pd.DataFrame:
    """Order, TTP per step and both indices for the standard form and the factorized schemes."""
    orders = list(orders) if orders is not None else list(range(2, 20))
    rows = [("hpi-std", p, p) for p in orders]
    rows += [("hpi9", 9, 5), ("hpi19", 19, 7)]
    return pd.DataFrame(
        [
            {"method": method, "order": p, "ttp": n, "iei": iei(p, n), "cei": cei(p, n)}
            for method, p, n in rows
        ]
    )
