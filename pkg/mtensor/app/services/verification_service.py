"""Cross-checks of the main computational paths against the block-diagonal oracle."""

from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel

from ..config import settings
from ..tensor import oracle
from ..tensor.generators import gen_random_index1
from ..tensor.hyperpower import (
    Hpi19Coefficients,
    hat_spectral_gamma,
    hpi9_step,
    hpi19_step,
    hpi_standard_step,
)
from ..tensor.mqr import mqr_decompose
from ..tensor.outer_inverse import (
    OuterVariant,
    drazin_qr,
    moore_penrose_qr,
    outer_inverse_qr,
)
from ..tensor.tensor_core import (
    MTensorContext,
    TTPCounter,
    conj_transpose,
    fro_norm,
    identity_tensor,
    m_product,
)
from ..tensor.transform import Tensor3, make_dft, make_m1, make_random_invertible

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class CheckResult(BaseModel):
    check: str
    transform: str
    value: float
    threshold: float
    passed: bool


def _rel(a: Tensor3, b: Tensor3) -> float:
    return fro_norm(a - b) / max(fro_norm(b), 1e-300)


def _random(rng: np.random.Generator, m: int, n: int, p: int) -> Tensor3:
    return Tensor3(rng.standard_normal((p, m, n)))


class VerificationService:
    def __init__(self, n: int = 4, m: Optional[int] = None, p: int = 3, seed: int = 0,
                 coeffs: Optional[Hpi19Coefficients] = None):
        self.n = n
        self.m = m if m is not None else n + 2
        self.p = p
        self.seed = seed
        self.coeffs = coeffs or Hpi19Coefficients()
        self.results: List[CheckResult] = []

    def _record(self, check: str, transform: str, value: float, threshold: float):
        passed = bool(np.isfinite(value) and value <= threshold)
        self.results.append(
            CheckResult(check=check, transform=transform, value=float(value), threshold=threshold, passed=passed)
        )
        log = logger.debug if passed else logger.error
        log(f"verify {check} [{transform}]: {value:.3e} (threshold {threshold:.0e})")

    def _guarded(self, check: str, transform: str, threshold: float, fn: Callable[[], float]):
        try:
            value = fn()
        except Exception as e:
            logger.error(f"verify {check} [{transform}] raised {type(e).__name__}: {e}", exc_info=True)
            value = float("inf")
        self._record(check, transform, value, threshold)

    def _contexts(self):
        return {
            "dft": MTensorContext(transform=make_dft(self.p)),
            "m1": MTensorContext(transform=make_m1(self.p)),
            "random": MTensorContext(transform=make_random_invertible(self.p, self.seed)),
        }

    def _keystone(self, rng):
        ctx = MTensorContext(transform=make_dft(self.p))
        A = _random(rng, self.m, self.n, self.p)
        B = _random(rng, self.n, self.n, self.p)
        got = m_product(A, B, ctx)
        expected = oracle.t_product_direct(A, B)
        return fro_norm(got - expected) / (fro_norm(A) * fro_norm(B))

    def _hpi_equivalence(self, ctx, rng, order: int) -> float:
        A = _random(rng, self.m, self.n, self.p)
        Z = hat_spectral_gamma(A, ctx) * conj_transpose(A, ctx)
        reference = hpi_standard_step(A, Z, order, ctx)
        if order == 19:
            got = hpi19_step(A, Z, ctx, self.coeffs)
        else:
            got = hpi9_step(A, Z, ctx)
        return _rel(got, reference)

    def _ttp_accounting(self, ctx, rng) -> float:
        A = _random(rng, self.m, self.n, self.p)
        Z = hat_spectral_gamma(A, ctx) * conj_transpose(A, ctx)
        counter = TTPCounter()
        expected = 0
        for step, ttp in ((lambda: hpi19_step(A, Z, ctx, self.coeffs, counter), 7),
                          (lambda: hpi9_step(A, Z, ctx, counter), 5),
                          (lambda: hpi_standard_step(A, Z, 4, ctx, counter), 4)):
            step()
            expected += ttp
        return float(abs(counter.value - expected))

    def run(self) -> pd.DataFrame:
        rng = np.random.default_rng(self.seed)
        self.results = []

        self._guarded("t-product keystone", "dft", 1e-10, lambda: self._keystone(rng))
        self._record("hpi19 coefficient systems", "-", self.coeffs.max_residual(), 1e-14)

        for name, ctx in self._contexts().items():
            A = _random(rng, self.m, self.n, self.p)
            B = _random(rng, self.n, self.m, self.p)
            self._guarded("mat homomorphism", name, 1e-11,
                          lambda: oracle.mat_residual(A, B, m_product(A, B, ctx), ctx))

            def mqr_reconstruction():
                F = mqr_decompose(A, ctx)
                return fro_norm(m_product(A, F.P, ctx) - m_product(F.Q, F.R, ctx)) / fro_norm(A)

            self._guarded("mqr reconstruction", name, 1e-10, mqr_reconstruction)
            self._guarded("moore-penrose vs oracle", name, 1e-9,
                          lambda: _rel(moore_penrose_qr(A, ctx), oracle.oracle_pinv(A, ctx)))

            S = gen_random_index1(self.n, self.p, max(1, self.n // 2), self.seed, ctx)
            self._guarded("drazin vs oracle", name, 1e-9,
                          lambda: _rel(drazin_qr(S, ctx), oracle.oracle_drazin(S, ctx)))

            s = max(1, self.n // 2)
            W = m_product(_random(rng, self.n, s, self.p), _random(rng, s, self.m, self.p), ctx)
            self._guarded("outer qr_b vs oracle", name, 1e-9,
                          lambda: _rel(outer_inverse_qr(A, W, ctx), oracle.outer_via_mat(A, W, ctx)))
            self._guarded("outer qr_b vs qr_d", name, 1e-9,
                          lambda: _rel(outer_inverse_qr(A, W, ctx, variant=OuterVariant.QR_D),
                                       outer_inverse_qr(A, W, ctx)))

            self._guarded("hpi19 = standard order 19", name, 1e-10,
                          lambda: self._hpi_equivalence(ctx, rng, 19))
            self._guarded("hpi9 = standard order 9", name, 1e-10,
                          lambda: self._hpi_equivalence(ctx, rng, 9))
            self._guarded("ttp accounting", name, 0.0, lambda: self._ttp_accounting(ctx, rng))
            self._guarded("identity fixed point", name, 1e-12,
                          lambda: _rel(m_product(identity_tensor(self.n, ctx), B, ctx), B))

        return pd.DataFrame([r.model_dump() for r in self.results])


def verify_mode(
    n: int = 4,
    m: Optional[int] = None,
    p: int = 3,
    seed: int = 0,
    coeffs: Optional[Hpi19Coefficients] = None,
) -> Tuple[int, Optional[pd.DataFrame]]:
    """Run every oracle and factorization check.

    Returns the exit code (0 all passed, 1 a check failed, 2 oversize request) and the
    table of checks.
    """
    max_dim, max_p = settings.bench.verify_max_dim, settings.bench.verify_max_p
    rows = m if m is not None else n + 2
    if max(n, rows) > max_dim or p > max_p or min(n, rows, p) < 1:
        logger.error(
            f"Verification is limited to m, n <= {max_dim} and 1 <= p <= {max_p}; got m={rows}, n={n}, p={p}"
        )
        return EXIT_USAGE, None
    if n < 2:
        logger.error("Verification needs n >= 2 for the index-1 test tensor")
        return EXIT_USAGE, None

    logger.info(f"Running verification suite (m={rows}, n={n}, p={p}, seed={seed})")
    table = VerificationService(n=n, m=rows, p=p, seed=seed, coeffs=coeffs).run()
    failures = table[~table["passed"]]
    if failures.empty:
        logger.success(f"All {len(table)} verification checks passed.")
        return EXIT_OK, table

    logger.error(f"{len(failures)}/{len(table)} verification checks failed.")
    return EXIT_FAILED, table
