"""Worker-count resolution and a joblib map used by data-parallel stages."""

import logging
import os
from typing import Any, Callable, Iterable, List, Optional

from joblib import Parallel, delayed

logger = logging.getLogger(__name__)

WORKERS_ENV = "LATENTLENS_WORKERS"


def resolve_workers(requested: Optional[int] = None) -> int:
    """Number of workers: ``requested`` or all cores, capped by ``LATENTLENS_WORKERS``."""
    workers = requested if requested and requested > 0 else (os.cpu_count() or 1)
    cap = os.environ.get(WORKERS_ENV)
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            logger.warning(f"Ignoring non-integer {WORKERS_ENV}={cap!r}")
    return workers


def parallel_map(func: Callable[..., Any], items: Iterable[Any], workers: Optional[int] = None) -> List[Any]:
    """Apply ``func`` to every item, preserving input order in the result."""
    items = list(items)
    n_jobs = min(resolve_workers(workers), max(1, len(items)))
    if n_jobs == 1:
        return [func(item) for item in items]
    return Parallel(n_jobs=n_jobs)(delayed(func)(item) for item in items)
