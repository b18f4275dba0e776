import time

import pytest
from hypothesis import HealthCheck, settings

from mchlab.evolution import collision_experiment
from mchlab.soliton import build_params

settings.register_profile("lab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")

_ACCEPTANCE = {}
_TIMINGS = {}


@pytest.fixture
def params():
    return build_params(1.0, 5.0, 4.0)


@pytest.fixture(scope="session")
def collision_run():
    """One exact 2-soliton run through the collision at n = 8192, shared by tests."""
    start = time.perf_counter()
    out = collision_experiment(build_params(1.0, 5.0, 4.0))
    _TIMINGS["collision"] = time.perf_counter() - start
    return out


@pytest.fixture(scope="session")
def collision_seconds(collision_run):
    return _TIMINGS["collision"]


@pytest.fixture
def acceptance():
    def record(number, ok, detail, part=""):
        line = f"criterion {number}{part}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[(number, part)] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[key])


def random_speeds(rng, kappa):
    """Two ordered, distinct speeds strictly inside (3 kappa^2, 9 kappa^2)."""
    lo, hi = 3 * kappa**2, 9 * kappa**2
    while True:
        c1, c2 = sorted(rng.uniform(lo, hi, 2), reverse=True)
        if c1 - c2 > 1e-3 * kappa**2 and c2 > lo and c1 < hi:
            return float(c1), float(c2)
