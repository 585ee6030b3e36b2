"""
Shared fixtures: seeded generators and synthetic datasets.
"""
import numpy as np
import pytest

from regime_swk.models.measures import ReturnSeries, log_returns
from regime_swk.models.synthgen import SyntheticDataset, gen_scenario

DATA_SEED: int = 7


def full_periods_in_prefix(dataset: SyntheticDataset, years: int) -> int:
    n = years * dataset.spec.days_per_year * dataset.spec.obs_per_day
    return sum(period.end <= n for period in dataset.periods)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture(scope='session')
def dataset_1d() -> SyntheticDataset:
    return gen_scenario('1d', DATA_SEED)


@pytest.fixture(scope='session')
def dataset_1d_short() -> SyntheticDataset:
    """
    A 20-year 1D dataset whose first two years hold at least two complete
    bearish periods, so the 1- and 2-year prefixes have a minority regime.
    """
    for seed in range(500):
        dataset = gen_scenario('1d', seed)
        if full_periods_in_prefix(dataset, 2) >= 2 and full_periods_in_prefix(dataset, 1) >= 1:
            return dataset
    raise RuntimeError("No seed below 500 places two bearish periods in the first two years")


@pytest.fixture(scope='session')
def returns_1d(dataset_1d: SyntheticDataset) -> ReturnSeries:
    return log_returns(dataset_1d.prices)


@pytest.fixture(scope='session')
def dataset_1d_representative_year() -> SyntheticDataset:
    """
    A 20-year 1D dataset whose first year holds a bearish share close to the
    whole dataset's (15% to 35% of the year), so the 1-year prefix is a
    smaller sample of the same mix rather than a balanced one.
    """
    for seed in range(2000):
        dataset = gen_scenario('1d', seed)
        share = float((dataset.truncate(1).truth == 1).mean())
        if 0.15 <= share <= 0.35:
            return dataset
    raise RuntimeError("No seed below 2000 gives a first year with a 15-35% bearish share")
