"""Order-preserving thread map capped by ``DIMERWAVE_THREADS``."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import ConfigurationError


def max_workers() -> int:
    raw = os.environ.get("DIMERWAVE_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"DIMERWAVE_THREADS must be a positive integer, got {raw!r}")
    if n < 1:
        raise ConfigurationError(f"DIMERWAVE_THREADS must be a positive integer, got {raw!r}")
    return n


def pmap(fn, items):
    """``list(map(fn, items))`` on up to ``max_workers()`` threads."""
    items = list(items)
    n = min(max_workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
