import json
import joblib
from pathlib import Path
from typing import Any, Optional
from loguru import logger

from ..config import settings


def cache_key(*parts: Any) -> str:
    """Stable content hash for generator specs, transforms and flags."""
    return joblib.hash(parts)


def _cache_path(file_name: str, cache_dir: Optional[str]) -> Path:
    return Path(cache_dir or settings.bench.cache_dir) / file_name


def save_cache(data: Any, file_name: str, cache_dir: Optional[str] = None):
    cache_path = _cache_path(file_name, cache_dir)
    try:
        cache_path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(data, (dict, list)) and file_name.endswith(".json"):
            with open(cache_path, "w", encoding="utf-8") as f:
                json.dump(data, f, indent=4)
        else:
            joblib.dump(data, cache_path)
        logger.trace(f"Data cached to {cache_path}")
    except Exception as e:
        logger.warning(f"Error saving cache to {cache_path}: {e}")


def load_cache(file_name: str, cache_dir: Optional[str] = None) -> Optional[Any]:
    cache_path = _cache_path(file_name, cache_dir)
    if cache_path.exists():
        try:
            if file_name.endswith(".json"):
                with open(cache_path, "r", encoding="utf-8") as f:
                    data = json.load(f)
            else:
                data = joblib.load(cache_path)
            logger.trace(f"Data loaded from cache {cache_path}")
            return data
        except Exception as e:
            logger.warning(f"Error loading cache from {cache_path}: {e}. Invalidating cache.")
            try:
                cache_path.unlink()
            except OSError as oe:
                logger.error(f"Error removing corrupted cache file {cache_path}: {oe}")
            return None
    return None
