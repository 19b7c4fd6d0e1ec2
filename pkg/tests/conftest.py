import numpy as np
import pytest

from bellsel import AngleConfig, VConfig, run_v, run_w
from bellsel.quantum_core import BellLabel
from bellsel.toy_models import charlie_hoppers, charlie_retention

MILLION = 1_000_000


@pytest.fixture(scope="session")
def angles():
    return AngleConfig()


@pytest.fixture(scope="session")
def v_random(angles):
    return run_v(VConfig("random", angles), MILLION, seed=1)


@pytest.fixture(scope="session")
def v_c0(angles):
    return run_v(VConfig(BellLabel.C0, angles), MILLION, seed=11)


@pytest.fixture(scope="session")
def w_ens(angles):
    return run_w(angles, MILLION, seed=2)


@pytest.fixture(scope="session")
def v_fixed_quarter(angles):
    """Four 2.5e5-shot fixed-state V runs, keyed by label."""
    return {lbl: run_v(VConfig(lbl, angles), MILLION // 4, seed=100 + int(lbl)) for lbl in BellLabel}


@pytest.fixture(scope="session")
def retention(angles):
    return charlie_retention(MILLION, seed=3, target_state=BellLabel.C0, angles=angles)


@pytest.fixture(scope="session")
def hoppers(angles):
    return charlie_hoppers(MILLION, seed=3, angles=angles)


def conditional_freqs(ens, a, b):
    """Empirical P(A,B|a,b) in cell order (0,0),(0,1),(1,0),(1,1)."""
    m = (ens.a == a) & (ens.b == b)
    code = 2 * ens.A[m].astype(int) + ens.B[m]
    return np.bincount(code, minlength=4) / m.sum()


# acceptance summary: one pass/fail line per criterion

ACCEPTANCE_RESULTS = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        ACCEPTANCE_RESULTS[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(ACCEPTANCE_RESULTS.items()):
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
