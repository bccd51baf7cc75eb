import numpy as np
import pytest

from avdelay import PotentialOutcomeTable, PotentialUnit, SimConfig, generate_dataset

# first five printed rows of the simulated dataset:
# (i, E, t(0), t(1), y(0), y(1), w, pi(1), t_obs, y_obs)
TABLE1 = [
    (0, 0.0001, 3.39, 0.94, 0.19, 0.28, 1, 0.5, 0.94, 0.28),
    (1, 0.0004, 2.32, 1.40, 0.64, 0.25, 1, 0.5, 1.40, 0.25),
    (2, 0.0029, 4.96, 0.33, 0.96, 0.22, 0, 0.5, 4.96, 0.96),
    (3, 0.0030, 4.56, 1.65, 0.68, 0.09, 1, 0.5, 1.65, 0.09),
    (4, 0.0031, 2.93, 0.64, 0.16, 0.02, 0, 0.5, 2.93, 0.16),
]


@pytest.fixture
def table1():
    units = [PotentialUnit(i, e, t0, t1, y0, y1, p) for i, e, t0, t1, y0, y1, _, p, _, _ in TABLE1]
    return PotentialOutcomeTable.from_units(units)


@pytest.fixture
def table1_assignment():
    return np.array([row[6] for row in TABLE1])


@pytest.fixture(scope="session")
def small_table():
    return generate_dataset(SimConfig(n_units=40, seed=11))


@pytest.fixture(scope="session")
def medium_table():
    return generate_dataset(SimConfig(n_units=100, seed=5))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
