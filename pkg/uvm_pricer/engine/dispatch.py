"""Fan-out of the independent per-point solves of one time step.

With one worker the chunks run in-process. Otherwise each chunk becomes a Ray
task and the step payload is stored once with ``ray.put``.
"""

import logging
from typing import Callable, List, Sequence, TypeVar

import numpy as np
import ray
from ray.exceptions import RayTaskError

from uvm_pricer.config import CHUNKS_PER_WORKER, RAY_ADDRESS
from uvm_pricer.errors import PricingError

logger = logging.getLogger(__name__)

TaskT = TypeVar("TaskT")
ResultT = TypeVar("ResultT")

ChunkSolver = Callable[[TaskT, Sequence[int]], List[ResultT]]


def ensure_ray(workers: int) -> None:
    if ray.is_initialized():
        return
    if RAY_ADDRESS == "local":
        ray.init(address=RAY_ADDRESS, num_cpus=workers, log_to_driver=False)
    else:
        ray.init(address=RAY_ADDRESS, log_to_driver=False)
    logger.info(f"Connected to Ray at {RAY_ADDRESS}", extra={"workers": workers})


def chunk_indices(count: int, workers: int) -> List[List[int]]:
    """Contiguous, non-empty index chunks covering range(count) in order."""
    n_chunks = max(1, min(count, workers * CHUNKS_PER_WORKER))
    parts = np.array_split(np.arange(count), n_chunks)
    return [part.tolist() for part in parts if part.size]


def solve_all(
    solver: ChunkSolver, task: TaskT, count: int, workers: int = 1
) -> List[ResultT]:
    """Results for points 0..count-1, in index order, whatever the worker count."""
    if workers <= 1 or count <= 1:
        return solver(task, range(count))

    ensure_ray(workers)
    remote_solver = ray.remote(solver)
    task_ref = ray.put(task)
    futures = [
        remote_solver.remote(task_ref, chunk)
        for chunk in chunk_indices(count, workers)
    ]
    try:
        chunks = ray.get(futures)
    except RayTaskError as e:
        cause = getattr(e, "cause", None)
        if isinstance(cause, PricingError):
            raise cause from None
        raise
    return [result for chunk in chunks for result in chunk]
