import os
import sys
from pathlib import Path
from loguru import logger

DEFAULT_FORMAT = "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
LEVEL_ENV = "MTENSOR_LOG_LEVEL"


def _handler_level(logging_settings, key: str, default: str) -> str:
    """Handler level, never below the global ``level``."""
    floor = logger.level(logging_settings.get("level", "INFO").upper()).no
    wanted = logging_settings.get(key, default).upper()
    return wanted if logger.level(wanted).no >= floor else logging_settings.get("level", "INFO").upper()


def setup_logging(logging_settings, project_root: Path):
    logger.remove()
    log_format = logging_settings.get("format", DEFAULT_FORMAT)

    if logging_settings.get("console_enabled", True):
        console_level = os.environ.get(LEVEL_ENV) or _handler_level(logging_settings, "console_level", "INFO")
        logger.add(sys.stderr, level=console_level.upper(), format=log_format, colorize=True)

    if logging_settings.get("file_enabled", True):
        log_file_path = project_root / logging_settings.get("file_path", "logs/mtensor.log")
        log_file_path.parent.mkdir(parents=True, exist_ok=True)
        file_level = _handler_level(logging_settings, "file_level", "DEBUG")

        # diagnose would render whole slice stacks from frame locals
        logger.add(
            log_file_path,
            level=file_level,
            rotation=logging_settings.get("rotation", "10 MB"),
            retention=logging_settings.get("retention", "7 days"),
            format=log_format,
            encoding="utf-8",
            enqueue=True,
            backtrace=True,
            diagnose=False,
        )
        logger.debug(f"File logging enabled. Path: {log_file_path}, Level: {file_level}")
