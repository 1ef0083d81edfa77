"""
Trial Service

Runs independent Monte Carlo trials. Trial k draws from the stream spawned
from (seed, k), so results do not depend on the number of workers.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List

import numpy as np

from app.config import TRIAL_WORKERS

logger = logging.getLogger(__name__)

# reserved spawn key for post-processing streams (bootstrap); trial indices stay below it
AUX_STREAM = 2 ** 32


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based generator for one trial."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


def _run_one(task: Callable[[Any, np.random.Generator], Any], payload: Any, seed: int, trial: int) -> Any:
    return task(payload, trial_rng(seed, trial))


class TrialWorker:
    """Pool of trial runners; ``task(payload, rng)`` must be a module-level function."""

    def __init__(self, task: Callable[[Any, np.random.Generator], Any], seed: int, workers: int = TRIAL_WORKERS):
        self.task = task
        self.seed = int(seed)
        self.workers = max(1, int(workers))

    def run(self, payload: Any, trials: int, first: int = 0) -> List[Any]:
        """Results of trials first .. first + trials - 1 in trial order."""
        indices = range(first, first + trials)
        if self.workers == 1 or trials == 1:
            return [_run_one(self.task, payload, self.seed, t) for t in indices]
        logger.info("running %d trials on %d workers", trials, self.workers)
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            futures = [pool.submit(_run_one, self.task, payload, self.seed, t) for t in indices]
            return [future.result() for future in futures]
