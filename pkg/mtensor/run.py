import argparse
import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger

PROJECT_ROOT_PATH = Path(__file__).resolve().parent.parent
if str(PROJECT_ROOT_PATH) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT_PATH))

try:
    from mtensor.app.config import settings

    logger.debug("Successfully imported settings in run.py, logging should be configured.")
except Exception as e:
    logger.remove()
    logger.add(sys.stderr, level="ERROR")
    logger.critical(f"RUN.PY: Failed to import settings or setup logging: {e}", exc_info=True)
    sys.exit("Critical error: Could not initialize application configuration or logging.")

from mtensor.app.core.errors import SolverLoadError
from mtensor.app.services import experiment_service
from mtensor.app.services.solver_service import solver_service
from mtensor.app.services.verification_service import EXIT_OK, EXIT_USAGE, verify_mode
from mtensor.app.tensor.generators import Family
from mtensor.app.tensor.hyperpower import Hpi19Coefficients, StopRule
from mtensor.app.tensor.outer_inverse import InverseKind

FAMILIES = {
    "chow": Family.CHOW,
    "gearmat": Family.GEARMAT,
    "cycol": Family.CYCOL,
    "random": Family.RANDOM_DENSE,
    "index1": Family.RANDOM_INDEX1,
}
EXAMPLES = {"4.1": Family.EXAMPLE_4_1, "4.2": Family.EXAMPLE_4_2}
SQUARE_ONLY = {InverseKind.DRAZIN, InverseKind.GROUP}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtensor",
        description="Outer inverses of third-order tensors under the M-product: benchmarks and verification.",
    )
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--family", choices=sorted(FAMILIES), help="Generator family")
    source.add_argument("--example", choices=sorted(EXAMPLES), help="Fixed worked example")
    source.add_argument("--verify", action="store_true", help="Run the oracle cross-check suite")

    sizes = parser.add_argument_group("sizes")
    sizes.add_argument("--n", type=int, nargs="+", help="Slice orders (columns)")
    sizes.add_argument("--m", type=int, help="Rows for rectangular families (cycol, random)")
    sizes.add_argument("--p", type=int, nargs="+", help="Numbers of frontal slices")
    sizes.add_argument("--slice-rank", type=int, help="Slice rank for index1 tensors and outer-inverse W")
    sizes.add_argument("--period", type=int, help="Column period of cycol slices")

    transform = parser.add_argument_group("transform")
    transform.add_argument("--m-kind", nargs="+", choices=["dft", "m1", "random"], default=["dft"])
    transform.add_argument("--m-seed", type=int, default=0, help="Seed of random transforms (plus trial)")

    solver = parser.add_argument_group("solver")
    solver.add_argument("--method", nargs="+", default=[settings.solver.method],
                        help="mqr, hpi9, hpi19 or hpi-std:<p>")
    solver.add_argument("--inverse", choices=[k.value for k in InverseKind], default=InverseKind.MP.value)
    solver.add_argument("--tol", type=float, default=settings.solver.tol)
    solver.add_argument("--max-iters", type=int, default=settings.solver.max_iters)
    solver.add_argument("--gamma", type=float, help="Initial guess scaling (default per inverse kind)")
    solver.add_argument("--k", type=int, help="Drazin power (default: the M-index)")
    solver.add_argument("--stop", choices=[s.value for s in StopRule], default=StopRule.STEP.value)

    run = parser.add_argument_group("run")
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--n-jobs", type=int, help="Parallel workers (default from settings)")

    out = parser.add_argument_group("outputs")
    out.add_argument("--out", help="CSV path (default from settings)")
    out.add_argument("--json", help="JSON records path")
    out.add_argument("--plot-data", help="Mean wall time series CSV path")
    out.add_argument("--efficiency", help="Write the CEI/IEI table to this CSV path")

    # test hook: shifts zeta1 so the coefficient check fails
    parser.add_argument("--perturb-coefficients", type=float, default=None, help=argparse.SUPPRESS)
    return parser


def _validate(args: argparse.Namespace) -> Optional[str]:
    for method in args.method:
        try:
            solver_service.get_solver(method)
        except SolverLoadError as e:
            return str(e)
    for value, flag in ((args.n, "--n"), (args.p, "--p")):
        if value and min(value) < 1:
            return f"{flag} values must be positive"
    if args.trials < 1:
        return "--trials must be positive"
    if args.tol <= 0 or args.max_iters < 1:
        return "--tol must be positive and --max-iters at least 1"
    if args.k is not None and args.k < 0:
        return "--k must be non-negative"
    inverse = InverseKind(args.inverse)
    if inverse in SQUARE_ONLY and args.m is not None and args.n and any(n != args.m for n in args.n):
        return f"{inverse.value} inverses need square slices; drop --m or set it equal to --n"
    return None


def _verify(args: argparse.Namespace) -> int:
    coeffs = None
    if args.perturb_coefficients is not None:
        base = Hpi19Coefficients()
        coeffs = base.model_copy(update={"zeta1": base.zeta1 + args.perturb_coefficients})
        logger.warning(f"Verification with zeta1 perturbed by {args.perturb_coefficients:.3e}")
    n = args.n[0] if args.n else 4
    p = args.p[0] if args.p else 3
    code, table = verify_mode(n=n, m=args.m, p=p, seed=args.seed, coeffs=coeffs)
    if table is not None and code != EXIT_OK:
        print(table[~table["passed"]].to_string(index=False))
    return code


def _plan(args: argparse.Namespace) -> experiment_service.ExperimentPlan:
    family = FAMILIES[args.family] if args.family else EXAMPLES[args.example]
    fields = dict(
        family=family,
        rows=args.m,
        m_kinds=args.m_kind,
        m_seed=args.m_seed,
        methods=[m.strip().lower() for m in args.method],
        inverse=InverseKind(args.inverse),
        tol=args.tol,
        max_iters=args.max_iters,
        gamma=args.gamma,
        trials=args.trials,
        seed=args.seed,
        slice_rank=args.slice_rank,
        period=args.period,
        k=args.k,
        stop=StopRule(args.stop),
    )
    if args.n:
        fields["sizes"] = args.n
    if args.p:
        fields["p_values"] = args.p
    return experiment_service.ExperimentPlan(**fields)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    if args.efficiency:
        experiment_service.write_efficiency(args.efficiency)
    if args.verify:
        return _verify(args)
    if not (args.family or args.example):
        if args.efficiency:
            return EXIT_OK
        parser.print_usage(sys.stderr)
        logger.error("One of --family, --example or --verify is required")
        return EXIT_USAGE

    problem = _validate(args)
    if problem:
        parser.print_usage(sys.stderr)
        logger.error(problem)
        return EXIT_USAGE
    if args.n_jobs is not None:
        settings.bench.n_jobs = args.n_jobs

    plan = _plan(args)
    logger.debug(f"Experiment plan: {plan.model_dump(mode='json')}")
    records = experiment_service.run_experiment(plan)

    out_csv = args.out or settings.bench.out_csv
    experiment_service.write_csv(records, out_csv)
    if args.json:
        experiment_service.write_json(records, args.json)
    if args.plot_data:
        experiment_service.emit_plot_data(records, args.plot_data)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
