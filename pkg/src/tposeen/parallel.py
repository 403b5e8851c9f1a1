"""Deterministic parallel mapping for per-mode and per-sample work."""

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import ConfigError


def worker_count(n_items):
    """Worker count from TPOSEEN_WORKERS, else the CPU count, capped by work."""
    raw = os.environ.get("TPOSEEN_WORKERS")
    if raw is None:
        workers = os.cpu_count() or 1
    else:
        try:
            workers = int(raw)
        except ValueError:
            raise ConfigError("TPOSEEN_WORKERS must be an integer, got %r" % raw)
        if workers < 1:
            raise ConfigError("TPOSEEN_WORKERS must be positive")
    return max(1, min(workers, n_items))


def ordered_map(fn, items, workers=None):
    """Map preserving input order, so results are identical at any width."""
    items = list(items)
    if workers is None:
        workers = worker_count(len(items))
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
