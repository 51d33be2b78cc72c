"""Worker-count resolution and deterministic per-task RNG streams.

Every randomized step in the package derives its generator from a root seed
plus integer task coordinates, never from execution order, so results are
identical for any worker count.
"""

import os

import numpy as np

WORKERS_ENV = "TRADESYNC_WORKERS"


def resolve_workers(workers: int | None = None) -> int:
    """Explicit argument wins, then the TRADESYNC_WORKERS env var, then all cores."""
    if workers is not None:
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        return workers
    env = os.environ.get(WORKERS_ENV)
    if env:
        n = int(env)
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1, got {env}")
        return n
    return os.cpu_count() or 1


def task_rng(root_seed: int, *coords: int) -> np.random.Generator:
    """Generator for the task at integer coordinates (pair indices, replica index...)."""
    return np.random.default_rng(np.random.SeedSequence([int(root_seed), *map(int, coords)]))


def chunked(items: list, n_chunks: int) -> list[list]:
    """Split items into at most n_chunks contiguous, near-equal chunks."""
    n = len(items)
    n_chunks = max(1, min(n_chunks, n))
    size, extra = divmod(n, n_chunks)
    out = []
    start = 0
    for c in range(n_chunks):
        stop = start + size + (1 if c < extra else 0)
        out.append(items[start:stop])
        start = stop
    return out
