"""Realization-indexed ensembles on a process pool.

Each realization's randomness is keyed by its index, so results do not
depend on how realizations are distributed over workers; reductions always
run over the index-ordered list.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from functools import partial

from .integrator import IntegrationConfig, run_trajectory


def _blocks(total: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, total))
    edges = [total * i // parts for i in range(parts + 1)]
    return [(edges[i], edges[i + 1] - edges[i]) for i in range(parts)]


def _call_block(fn, kwargs, block):
    start, count = block
    return fn(real_start=start, count=count, **kwargs)


def map_blocks(fn, total: int, workers: int = 1, **kwargs) -> list:
    """Run ``fn(real_start, count, **kwargs)`` over contiguous blocks of realizations."""
    blocks = _blocks(total, workers)
    task = partial(_call_block, fn, kwargs)
    if workers <= 1:
        return [task(b) for b in blocks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, blocks))


def _one(realization, psi0, spec, cfg, policy, backend):
    return run_trajectory(psi0, spec, cfg, policy, realization=realization, backend=backend).series


def run_ensemble(psi0, spec, cfg: IntegrationConfig, policy, realizations: int,
                 workers: int = 1, backend: str | None = None, first: int = 0) -> list:
    """ObservableSeries for realizations first .. first+realizations-1, in index order."""
    task = partial(_one, psi0=psi0, spec=spec, cfg=cfg, policy=policy, backend=backend)
    indices = range(first, first + realizations)
    if workers <= 1:
        return [task(r) for r in indices]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, indices))
