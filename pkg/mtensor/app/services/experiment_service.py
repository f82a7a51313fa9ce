import itertools
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from ..config import settings
from ..core import caching
from ..core.errors import DivergedError, MTensorError
from ..solvers.base import SolveOptions
from ..tensor.generators import Family, GeneratorSpec, build_tensor
from ..tensor.hyperpower import StopRule, default_gamma, efficiency_table
from ..tensor.outer_inverse import InverseKind, ResidualReport, residual_report
from ..tensor.tensor_core import MTensorContext, index_m, m_product
from ..tensor.transform import Tensor3, make_transform
from .solver_service import solver_service

CSV_COLUMNS = [
    "family", "n", "m", "p", "m_kind", "method", "inverse", "tol", "seed", "trial",
    "iterations", "ttp", "converged", "E1", "E2", "E3", "E4", "E5", "E1k", "wall_ms",
]
RESIDUAL_COLUMNS = ["E1", "E2", "E3", "E4", "E5", "E1k"]
PLOT_COLUMNS = ["method", "m_kind", "n", "mean_wall_ms", "runs"]

SQUARE_FAMILIES = {Family.CHOW, Family.GEARMAT, Family.RANDOM_INDEX1, Family.EXAMPLE_4_1, Family.EXAMPLE_4_2}
FIXED_DIMS = {Family.EXAMPLE_4_1: (2, 2, 4), Family.EXAMPLE_4_2: (3, 3, 3)}


class ExperimentPlan(BaseModel):
    family: Family
    sizes: List[int] = Field(default_factory=lambda: list(settings.bench.default_sizes))
    rows: Optional[int] = None
    p_values: List[int] = Field(default_factory=lambda: list(settings.bench.default_p))
    m_kinds: List[str] = Field(default_factory=lambda: ["dft"])
    m_seed: int = 0
    methods: List[str] = Field(default_factory=lambda: [settings.solver.method])
    inverse: InverseKind = InverseKind.MP
    tol: float = Field(default_factory=lambda: settings.solver.tol, gt=0)
    max_iters: int = Field(default_factory=lambda: settings.solver.max_iters, ge=1)
    gamma: Optional[float] = None
    trials: int = Field(1, ge=1)
    seed: int = 0
    slice_rank: Optional[int] = None
    period: Optional[int] = None
    k: Optional[int] = None
    stop: StopRule = StopRule.STEP


class RunRecord(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    generator: GeneratorSpec
    transform_kind: str
    method: str
    inverse_kind: InverseKind
    tol: float
    trial: int
    iterations: int = 0
    ttp_count: int = 0
    wall_time_ms: float = 0.0
    residuals: ResidualReport = Field(default_factory=ResidualReport)
    converged: bool = False
    error: Optional[str] = None

    def to_row(self) -> Dict[str, object]:
        m, n, p = self.generator.dims
        row = {
            "family": self.generator.family.value,
            "n": n,
            "m": m,
            "p": p,
            "m_kind": self.transform_kind,
            "method": self.method,
            "inverse": self.inverse_kind.value,
            "tol": self.tol,
            "seed": self.generator.seed,
            "trial": self.trial,
            "iterations": self.iterations,
            "ttp": self.ttp_count,
            "converged": self.converged,
        }
        row.update({col: getattr(self.residuals, col) for col in RESIDUAL_COLUMNS})
        row["wall_ms"] = self.wall_time_ms
        return row

    def sort_key(self) -> Tuple:
        m, n, p = self.generator.dims
        return (self.generator.family.value, n, m, p, self.transform_kind, self.method, self.trial)


def _generator_spec(plan: ExperimentPlan, n: int, p: int, trial: int) -> GeneratorSpec:
    if plan.family in FIXED_DIMS:
        dims = FIXED_DIMS[plan.family]
    else:
        m = n if plan.family in SQUARE_FAMILIES or plan.rows is None else plan.rows
        dims = (m, n, p)
    params = {}
    if plan.family == Family.RANDOM_INDEX1 and plan.slice_rank is not None:
        params["slice_rank"] = plan.slice_rank
    if plan.family == Family.CYCOL and plan.period is not None:
        params["period"] = plan.period
    return GeneratorSpec(family=plan.family, dims=dims, params=params, seed=plan.seed + trial)


def load_or_build_tensor(spec: GeneratorSpec, ctx: MTensorContext, m_kind: str) -> Tensor3:
    """Generated tensors are cached by spec and transform."""
    key = caching.cache_key(spec.model_dump(mode="json"), m_kind, ctx.transform.matrix) + ".joblib"
    if settings.bench.use_cache:
        cached = caching.load_cache(key)
        if cached is not None:
            logger.trace(f"Tensor for {spec.family.value} loaded from cache")
            return Tensor3(cached)
    A = build_tensor(spec, ctx)
    if settings.bench.use_cache:
        caching.save_cache(np.asarray(A.data), key)
    return A


def _outer_weight(A: Tensor3, ctx: MTensorContext, s: int, seed: int) -> Tensor3:
    """W = B *_M C from a seeded Gaussian pair with s columns."""
    m, n, p = A.dims
    rng = np.random.default_rng(seed)
    B = Tensor3(rng.standard_normal((p, n, s)))
    C = Tensor3(rng.standard_normal((p, s, m)))
    return m_product(B, C, ctx)


def _solve_with_retries(method: str, A: Tensor3, ctx: MTensorContext, options: SolveOptions):
    retries = settings.solver.gamma_halving_retries
    for attempt in range(retries + 1):
        try:
            return solver_service.solve(method, A, ctx, options)
        except DivergedError as e:
            if method == "mqr" or attempt == retries:
                raise
            gamma = options.gamma
            if gamma is None:
                gamma = default_gamma(A, ctx, options.kind, k=options.k, W=options.W)
            options = options.model_copy(update={"gamma": gamma / 2})
            logger.warning(
                f"{method} diverged at iteration {e.iteration}; retrying with gamma={gamma / 2:.4e}"
            )


def _run_single(plan: ExperimentPlan, n: int, p: int, m_kind: str, method: str, trial: int) -> RunRecord:
    spec = _generator_spec(plan, n, p, trial)
    record = RunRecord(
        generator=spec,
        transform_kind=m_kind,
        method=method,
        inverse_kind=plan.inverse,
        tol=plan.tol,
        trial=trial,
    )
    try:
        ctx = MTensorContext(transform=make_transform(m_kind, spec.dims[2], seed=plan.m_seed + trial))
        A = load_or_build_tensor(spec, ctx, m_kind)

        k = plan.k
        if plan.inverse == InverseKind.DRAZIN and k is None:
            k = index_m(A, ctx)
        elif plan.inverse == InverseKind.GROUP:
            k = 1
        W = None
        if plan.inverse == InverseKind.OUTER:
            s = plan.slice_rank or max(1, min(A.dims[:2]) // 2)
            W = _outer_weight(A, ctx, s, spec.seed + 7919)

        options = SolveOptions(
            kind=plan.inverse,
            W=W,
            k=k,
            tol=plan.tol,
            max_iters=plan.max_iters,
            gamma=plan.gamma,
            stop=plan.stop,
        )
        start = time.perf_counter()
        result = _solve_with_retries(method, A, ctx, options)
        wall_ms = (time.perf_counter() - start) * 1e3

        k_used = 1 if result.k is None else result.k
        residuals = residual_report(A, result.X, plan.inverse, ctx, k=k_used)
        residuals = residuals.model_copy(
            update={"iterations": result.iterations, "ttp_count": result.ttp_count}
        )
        return record.model_copy(
            update={
                "iterations": result.iterations,
                "ttp_count": result.ttp_count,
                "wall_time_ms": wall_ms,
                "residuals": residuals,
                "converged": result.converged,
            }
        )
    except (MTensorError, ValueError, np.linalg.LinAlgError) as e:
        logger.error(
            f"Run failed ({spec.family.value}, n={n}, p={p}, {m_kind}, {method}, trial {trial}): {e}",
            exc_info=True,
        )
        return record.model_copy(update={"converged": False, "error": f"{type(e).__name__}: {e}"})


def run_experiment(plan: ExperimentPlan) -> List[RunRecord]:
    sizes = [FIXED_DIMS[plan.family][1]] if plan.family in FIXED_DIMS else plan.sizes
    p_values = [FIXED_DIMS[plan.family][2]] if plan.family in FIXED_DIMS else plan.p_values
    tasks = list(itertools.product(sizes, p_values, plan.m_kinds, plan.methods, range(plan.trials)))
    logger.info(
        f"Running {len(tasks)} runs: family={plan.family.value}, inverse={plan.inverse.value}, "
        f"methods={plan.methods}, m_kinds={plan.m_kinds}"
    )

    records = Parallel(n_jobs=settings.bench.n_jobs, prefer="threads")(
        delayed(_run_single)(plan, n, p, m_kind, method, trial)
        for n, p, m_kind, method, trial in tasks
    )
    records = sorted(records, key=lambda r: r.sort_key())

    failed = sum(1 for r in records if r.error)
    if records:
        summary = records_frame(records).groupby(["method", "m_kind", "n"])["wall_ms"].mean()
        logger.info(f"Mean wall time (ms) per method/transform/size:\n{summary.to_string()}")
    if failed:
        logger.warning(f"{failed}/{len(records)} runs failed; see the error column of the JSON output")
    else:
        logger.success(f"All {len(records)} runs completed.")
    return records


def records_frame(records: List[RunRecord]) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in records], columns=CSV_COLUMNS)


def _ensure_parent(path: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    return target


def write_csv(records: List[RunRecord], path: str):
    target = _ensure_parent(path)
    records_frame(records).to_csv(target, index=False)
    logger.info(f"Wrote {len(records)} rows to {target}")


def write_json(records: List[RunRecord], path: str):
    target = _ensure_parent(path)
    frame = records_frame(records)
    frame["error"] = [r.error for r in records]
    frame.to_json(target, orient="records", indent=2)
    logger.info(f"Wrote {len(records)} records to {target}")


def emit_plot_data(records: List[RunRecord], path: str) -> pd.DataFrame:
    """Mean wall time per (method, transform kind, order n): one series point per row."""
    frame = records_frame(records)
    frame = frame[frame["E2"].notna()] if not frame.empty else frame
    if frame.empty:
        series = pd.DataFrame(columns=PLOT_COLUMNS)
    else:
        series = (
            frame.groupby(["method", "m_kind", "n"], sort=True)["wall_ms"]
            .agg(mean_wall_ms="mean", runs="count")
            .reset_index()
        )[PLOT_COLUMNS]
    target = _ensure_parent(path)
    series.to_csv(target, index=False)
    logger.info(f"Wrote {len(series)} plot points to {target}")
    return series


def write_efficiency(path: str, orders: Optional[List[int]] = None) -> pd.DataFrame:
    table = efficiency_table(orders)
    target = _ensure_parent(path)
    table.to_csv(target, index=False)
    logger.info(f"Wrote efficiency table ({len(table)} rows) to {target}")
    return table
