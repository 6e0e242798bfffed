"""Order-preserving parallel map used by the replication loops."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def parallel_map(fn, jobs, workers: int = 1) -> list:
    """Map ``fn`` over ``jobs``, preserving order.

    With workers <= 1 this is a plain serial map.  Results must not depend on
    the worker count; callers guarantee that by seeding each job
    independently.
    """
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    chunk = max(1, len(jobs) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=chunk))
