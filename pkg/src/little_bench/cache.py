import logging
import pickle
from pathlib import Path
from typing import Any

from platformdirs import user_cache_dir

logger: logging.Logger = logging.getLogger(__name__)

CACHE_VERSION = 1


def get_cache_dir() -> Path:
    return Path(user_cache_dir(appname="little_bench"))


def get_cache_file(digest: str) -> Path:
    return get_cache_dir() / f"stats-{CACHE_VERSION}-{digest}.pickle"


def load_cache(digest: str) -> Any | None:
    cache_file = get_cache_file(digest)
    try:
        with cache_file.open("rb") as f:
            cache = pickle.load(f)
    except (
        pickle.UnpicklingError,
        ValueError,
        IndexError,
        EOFError,
        FileNotFoundError,
        AttributeError,
    ):
        logger.debug("cache miss for %s", digest[:12])
        return None
    else:
        logger.debug("cache hit for %s", digest[:12])
        return cache


def write_cache(digest: str, cache: Any) -> None:
    cache_file = get_cache_file(digest)
    cache_file.parent.mkdir(parents=True, exist_ok=True)
    with open(cache_file, "wb") as f:
        pickle.dump(cache, f)


def clear_cache() -> int:
    removed = 0
    for cache_file in get_cache_dir().glob(f"stats-{CACHE_VERSION}-*.pickle"):
        cache_file.unlink(missing_ok=True)
        removed += 1
    return removed
