"""
Counter-based seed derivation for reproducible multi-run experiments.

A master seed expands to one (seed, delta) pair per run through
``SeedSequence(master, spawn_key=(run,))``, so any single run can be
reproduced on its own without replaying the runs before it.
"""
import numpy as np

from .base import ModelBase
from .field_types import NonNegativeInt, Seed

_SEED_BOUND: int = 2**63


class RunSeed(ModelBase):
    """Seeds of one clustering run."""
    run: NonNegativeInt
    seed: Seed
    """Seed of the centroid initialization."""
    delta: NonNegativeInt
    """Random offset of the first window, uniform on [0, h2 - 1]."""


def run_generator(master_seed: int, run: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(run,)))


def derive_run_seed(master_seed: int, run: int, h2: int) -> RunSeed:
    rng = run_generator(master_seed, run)
    seed = int(rng.integers(0, _SEED_BOUND))
    delta = int(rng.integers(0, h2))
    return RunSeed(run=run, seed=seed, delta=delta)


def derive_run_seeds(master_seed: int, n_runs: int, h2: int) -> list[RunSeed]:
    return [derive_run_seed(master_seed, run, h2) for run in range(n_runs)]
