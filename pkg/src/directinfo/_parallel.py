"""Order-preserving process-pool map over independent tasks."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Sequence

_SHARED: Any = None


def _init(shared):
    global _SHARED
    _SHARED = shared


def _call(args):
    fn, chunk = args
    return [fn(_SHARED, item) for item in chunk]


def resolve_workers(n_jobs: int | None) -> int:
    if n_jobs is None or n_jobs == 0:
        return 1
    if n_jobs < 0:
        return max(1, (os.cpu_count() or 1) + 1 + n_jobs)
    return int(n_jobs)


def parallel_map(fn: Callable[[Any, Any], Any], items: Sequence, shared=None,
                 n_jobs: int | None = 1, chunk_size: int | None = None) -> list:
    """``[fn(shared, item) for item in items]``, optionally across processes.

    ``fn`` must be a module-level function. Results come back in input order
    whatever the worker count, and each task must seed itself from its own
    identity for the output to be worker-count independent.
    """
    items = list(items)
    workers = resolve_workers(n_jobs)
    if workers == 1 or len(items) <= 1:
        return [fn(shared, item) for item in items]
    if chunk_size is None:
        chunk_size = max(1, min(256, len(items) // (workers * 8) or 1))
    chunks = [items[i:i + chunk_size] for i in range(0, len(items), chunk_size)]
    out = []
    with ProcessPoolExecutor(max_workers=workers, initializer=_init,
                             initargs=(shared,)) as pool:
        for part in pool.map(_call, [(fn, c) for c in chunks]):
            out.extend(part)
    return out
