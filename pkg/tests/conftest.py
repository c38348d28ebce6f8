import time
from pathlib import Path

import numpy as np
import pytest

from tvrepair import census, repair

ROOT = Path(__file__).resolve().parents[1]
ADULT = ROOT / "data" / "adult.csv"
SWEEP_RHOS = tuple(round(0.02 * k, 10) for k in range(11))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def adult_dataset():
    return census.discretize(census.load_csv(ADULT))


@pytest.fixture(scope="session")
def adult_data(adult_dataset):
    return census.estimate(adult_dataset)


class _Solves:
    """Census repair plans, each solved at most once per session."""

    def __init__(self, data):
        self.data = data
        self.plans = {}
        self.seconds = {}

    def __call__(self, rho):
        rho = round(float(rho), 12)
        if rho not in self.plans:
            t = time.perf_counter()
            self.plans[rho] = repair.solve_repair(self.data, rho)
            self.seconds[rho] = time.perf_counter() - t
        return self.plans[rho]


@pytest.fixture(scope="session")
def adult_plan(adult_data):
    return _Solves(adult_data)


# --- acceptance summary ---------------------------------------------------------

_acceptance = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        verdict = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"{verdict}  {name}")
