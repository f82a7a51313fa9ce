import yaml
from pathlib import Path
from pydantic import BaseModel, Field
from typing import Optional, Dict, List

PROJECT_ROOT = Path(__file__).resolve().parent.parent.parent

from mtensor.app.core.logging_config import setup_logging


class NumericsConfig(BaseModel):
    rank_tol: Optional[float] = None
    index_rank_tol: float = 1e-10
    qr_rank_tol: float = 1e-10
    nonsingular_gate: float = 1e-12
    transform_cond_bound: float = 1e12
    random_transform_cond_gate: float = 1e6
    random_transform_max_attempts: int = 100
    use_fft_for_dft: bool = True


class SolverDefaults(BaseModel):
    tol: float = 1e-10
    max_iters: int = 100
    method: str = "hpi19"
    divergence_factor: float = 1e3
    divergence_window: int = 3
    plateau_drop: float = 1e6
    plateau_rtol: float = 1e-9
    gamma_halving_retries: int = 5
    check_rank_condition: bool = True


class GeneratorsConfig(BaseModel):
    cond_gate: float = 1e6
    max_resample: int = 10


class BenchConfig(BaseModel):
    cache_dir: str
    use_cache: bool = True
    n_jobs: int = 1
    default_sizes: List[int] = Field(default_factory=lambda: [10, 20, 40])
    default_p: List[int] = Field(default_factory=lambda: [2, 4, 8])
    out_csv: str = "results/runs.csv"
    verify_max_dim: int = 12
    verify_max_p: int = 4


class SolverEntry(BaseModel):
    type: str
    class_name: Optional[str] = Field(None, alias="class")


class LoggingConfig(BaseModel):
    level: str = "DEBUG"
    console_enabled: bool = True
    console_level: str = "INFO"
    file_enabled: bool = True
    file_path: str = "logs/mtensor.log"
    file_level: str = "DEBUG"
    rotation: str = "10 MB"
    retention: str = "7 days"
    format: str = (
        "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {name}:{function}:{line} - {message}"
    )


class Settings(BaseModel):
    numerics: NumericsConfig = Field(default_factory=NumericsConfig)
    solver: SolverDefaults = Field(default_factory=SolverDefaults)
    generators: GeneratorsConfig = Field(default_factory=GeneratorsConfig)
    bench: BenchConfig
    solvers: Dict[str, SolverEntry]
    logging: LoggingConfig = Field(default_factory=LoggingConfig)


def load_config() -> Settings:
    config_file_path = PROJECT_ROOT / "config" / "settings.yaml"

    with open(config_file_path, "r") as f:
        config_data = yaml.safe_load(f)

    config_data["bench"]["cache_dir"] = str(
        PROJECT_ROOT / config_data["bench"]["cache_dir"]
    )
    config_data["bench"]["out_csv"] = str(
        PROJECT_ROOT / config_data["bench"].get("out_csv", "results/runs.csv")
    )

    loaded_settings = Settings(**config_data)

    setup_logging(loaded_settings.logging.model_dump(), PROJECT_ROOT)

    return loaded_settings


settings = load_config()

from loguru import logger

logger.debug(f"Configuration loaded. Project Root: {PROJECT_ROOT}")
logger.debug(
    f"Numerics: qr_rank_tol={settings.numerics.qr_rank_tol}, "
    f"nonsingular_gate={settings.numerics.nonsingular_gate}"
)
