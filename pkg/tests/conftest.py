import pytest

from heatalloc import ScenarioConfig, simulate_season


@pytest.fixture(scope="session")
def small_run():
    """A short clean season shared by tests that only need a valid dataset."""
    cfg = ScenarioConfig(n_radiators=4, duration_days=2.0, seed=7,
                         n_subsets=2)
    return simulate_season(cfg)


@pytest.fixture(scope="session")
def small_dataset(small_run):
    return small_run[0]


@pytest.fixture(scope="session")
def small_truth(small_run):
    return small_run[1]
