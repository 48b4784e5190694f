import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fleetcharge.experiments import case_study_config, generate_solvable
from fleetcharge.scenario import ScenarioConfig

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def case_study():
    """(scenario, instance) for the case study with fixed provider energies."""
    s, inst, _ = generate_solvable(case_study_config(fixed_e_pro=True), 0)
    return s, inst


def random_config(rng: np.random.Generator) -> ScenarioConfig:
    """2-4 companies, 2-4 stations, fleets 10-100."""
    C = int(rng.integers(2, 5))
    m = int(rng.integers(2, 5))
    fleets = tuple(int(v) for v in rng.integers(10, 101, size=C))
    Q = tuple(float(v) for v in rng.uniform(1.0, 5.0, size=m))
    target = tuple(float(v) for v in rng.dirichlet(np.ones(m)) * sum(fleets))
    return ScenarioConfig(
        fleet_sizes=fleets,
        capacities=tuple(int(v) for v in rng.integers(5, 31, size=m)),
        target=target,
        Q=Q,
        P=tuple(float(v) for v in rng.uniform(0.1, 0.4, size=m)),
    )
