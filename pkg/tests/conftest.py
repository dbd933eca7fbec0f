import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lagcast.panel import NATIONAL_ID, MonthIndex, month_range

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def table_rows(cantons, start=MonthIndex(2000, 1), n=12, cases=10, pop=100_000, nat_cases=100,
               nat_pop=1_000_000, seed=0):
    """Raw (cases, population, climate) rows for ``cantons`` over ``n`` months."""
    rng = np.random.default_rng(seed)
    months = month_range(start, start + (n - 1))
    cases_rows, pop_rows, clim_rows = [], [], []
    for m in months:
        cases_rows.append((NATIONAL_ID, m.year, m.month, nat_cases))
        pop_rows.append((NATIONAL_ID, m.year, m.month, nat_pop))
    for cid in cantons:
        for m in months:
            cases_rows.append((cid, m.year, m.month, cases))
            pop_rows.append((cid, m.year, m.month, pop))
            clim_rows.append((cid, m.year, m.month, float(rng.uniform(0, 300)), float(rng.normal()),
                              float(rng.uniform(0, 1)), float(rng.uniform(290, 310)), float(rng.normal())))
    return cases_rows, pop_rows, clim_rows


@pytest.fixture
def rows2():
    return table_rows(["a", "b"])


# acceptance criteria record their verdicts here; the summary hook prints one line each
ACCEPTANCE: dict[int, tuple[bool, str]] = {}
N_CRITERIA = 8
_state = {"collected": False}


def pytest_collection_modifyitems(config, items):
    _state["collected"] = any(item.path.name == "test_acceptance.py" for item in items)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _state["collected"]:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        ok, detail = ACCEPTANCE.get(n, (False, "not run or errored before a verdict"))
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
