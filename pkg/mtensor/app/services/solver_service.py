import importlib
from typing import Dict, Optional

from loguru import logger

from ..config import SolverEntry, settings
from ..core.errors import SolverLoadError
from ..solvers.base import InverseSolverInterface, SolveOptions, SolverResult
from ..tensor.tensor_core import MTensorContext
from ..tensor.transform import Tensor3


class SolverService:
    def __init__(self):
        logger.info("Initializing SolverService...")
        self._solvers: Dict[str, InverseSolverInterface] = {}
        logger.debug(f"Configured solvers: {sorted(settings.solvers)}")

    def _load_solver(self, config: SolverEntry, key: str, order: Optional[int]):
        logger.debug(f"Attempting to load solver '{key}'. Config: {config.model_dump()}")
        solver_type = config.type
        class_name = config.class_name

        if not class_name:
            raise SolverLoadError(f"'class' (class_name) not specified for solver '{key}' in settings.yaml.")

        module_name = f"mtensor.app.solvers.{solver_type}_solvers"
        try:
            module = importlib.import_module(module_name)
            SolverClass = getattr(module, class_name)
        except ImportError as e:
            raise SolverLoadError(f"Module {module_name} not found for solver '{key}'.") from e
        except AttributeError as e:
            raise SolverLoadError(f"Class {class_name} not found in module {module_name}.") from e
        logger.debug(f"Found class {class_name} in module {module_name} for solver '{key}'.")

        solver_params = {}
        if order is not None:
            solver_params["order"] = order
        logger.info(f"Initializing solver '{key}' ({class_name}) with params: {solver_params}")
        return SolverClass(**solver_params)

    def get_solver(self, method: str) -> InverseSolverInterface:
        """Resolve a CLI method name (``mqr``, ``hpi9``, ``hpi19``, ``hpi-std:<p>``)."""
        method = method.strip().lower()
        if method in self._solvers:
            return self._solvers[method]

        key, _, order_text = method.partition(":")
        config = settings.solvers.get(key)
        if config is None:
            raise SolverLoadError(f"Unknown method '{method}'. Known: {sorted(settings.solvers)}")
        order = None
        if order_text:
            try:
                order = int(order_text)
            except ValueError:
                raise SolverLoadError(f"Bad order in method '{method}'") from None
            if order < 2:
                raise SolverLoadError(f"Hyperpower order must be >= 2, got {order}")

        solver = self._load_solver(config, key, order)
        self._solvers[method] = solver
        return solver

    def solve(
        self, method: str, A: Tensor3, ctx: MTensorContext, options: SolveOptions
    ) -> SolverResult:
        solver = self.get_solver(method)
        logger.debug(f"Solving {options.kind.value} inverse of {A.dims} tensor with {method}")
        return solver.solve(A, ctx, options)


solver_service = SolverService()
