from pathlib import Path

import numpy as np
import pytest

from genspec import simulate as S

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = Path(__file__).resolve().parent / "fixtures"
SQRT2 = float(np.sqrt(2.0))


def ou_path(n, dt, seed, h=None, theta=1.0):
    """Stationary 1D OU path dX = -theta X dt + sqrt(2) dW sampled every ``dt``."""
    h = dt if h is None else h
    stride = int(round(dt / h))
    spec = S.OUSpec([[-theta]], [[SQRT2]], h=h, burn_in=0, seed=seed)
    return S.euler_maruyama(spec, n, stride)


def triple_well_path(n, dt, seed, h=1e-3, burn_in=10_000):
    spec = S.LangevinSpec(S.triple_well(), 1.0, 1.0, h, burn_in, seed)
    return S.euler_maruyama(spec, n, int(round(dt / h)))


@pytest.fixture(scope="session")
def ou_short():
    return ou_path(2000, 0.01, seed=7)


@pytest.fixture(scope="session")
def ou_medium():
    return ou_path(10_000, 0.01, seed=0)


@pytest.fixture(scope="session")
def triple_well_short():
    return triple_well_path(1000, 0.05, seed=3)


# acceptance reporting: one pass/fail line per criterion in the terminal summary
ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    label = item.get_closest_marker("criterion")
    if label is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        status = "PASS" if rep.passed else "FAIL"
        detail = getattr(item, "acceptance_detail", "")
        if rep.failed and not detail:
            detail = rep.longrepr.reprcrash.message if hasattr(rep.longrepr, "reprcrash") else ""
        ACCEPTANCE[label.args[0]] = (label.args[1], status, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        title, status, detail = ACCEPTANCE[key]
        line = f"{key:<4} {status}  {title}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
