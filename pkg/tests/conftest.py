"""Shared fixtures. The bundled example run is the most expensive shared
resource, so it is executed once per session and handed around."""

import time

import pytest

from visifilter.scenario_io import bundled_scenario_path, load_scenario
from visifilter.sim import run


@pytest.fixture(scope="session")
def example3():
    """(Scenario, resolved doc) for the bundled example3 scenario."""
    return load_scenario(bundled_scenario_path("example3"))


@pytest.fixture(scope="session")
def example3_run(example3):
    """(Trace, wall seconds) of the full filtered example3 run."""
    scenario, _ = example3
    start = time.perf_counter()
    trace = run(scenario)
    return trace, time.perf_counter() - start
