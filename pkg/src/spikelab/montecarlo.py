"""Reproducible Monte Carlo orchestration.

Trial ``t`` of a stream always receives the generator
``trial_rng(master_seed, stream, t)`` and runs with BLAS limited to one
thread, so its output does not depend on how many worker processes share
the work. Results are returned in trial order.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager

import numpy as np
from threadpoolctl import threadpool_limits

from .ensemble import trial_rng

__all__ = ["run_trials", "stack", "default_workers", "dry_run", "DryRunStop"]


class DryRunStop(Exception):
    """Raised by ``run_trials`` inside ``dry_run``: everything before sampling was accepted."""


_DRY = [False]


@contextmanager
def dry_run():
    """Make ``run_trials`` stop before the first trial, for validating configurations."""
    _DRY[0] = True
    try:
        yield
    finally:
        _DRY[0] = False


def default_workers():
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def _run_one(task, master_seed, stream, trial):
    with threadpool_limits(limits=1):
        return task(trial_rng(master_seed, stream, trial), trial)


def _run_chunk(task, master_seed, stream, trials):
    return [_run_one(task, master_seed, stream, t) for t in trials]


def run_trials(task, trials, master_seed, stream=0, workers=1):
    """Run ``task(rng, trial)`` for ``trial in range(trials)``.

    ``task`` must be picklable when ``workers > 1`` (a module-level function
    or a ``functools.partial`` of one).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if _DRY[0]:
        raise DryRunStop
    workers = max(1, int(workers or 1))
    if workers == 1 or trials == 1:
        return [_run_one(task, master_seed, stream, t) for t in range(trials)]
    # contiguous chunks, reassembled in trial order
    bounds = np.linspace(0, trials, min(workers * 4, trials) + 1).astype(int)
    chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_chunk, task, master_seed, stream, c) for c in chunks]
        out = []
        for f in futures:
            out.extend(f.result())
    return out


def stack(results):
    """Turn a list of per-trial dicts into a dict of arrays with a leading trial axis."""
    if not results:
        return {}
    return {k: np.asarray([r[k] for r in results]) for k in results[0]}
