"""Shared fixtures and the acceptance summary hook."""
import numpy as np
import pytest

from oiss import PiecewiseFn, PowerYoung, build_counterexample

#: Filled by tests/test_acceptance.py: criterion number -> (passed, detail).
ACCEPTANCE_RESULTS: dict = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


@pytest.fixture(scope="session")
def ce3():
    """Three-block counterexample with t_k = 2^-(k+1) and power 2."""
    return build_counterexample(PowerYoung(2.0), 3, tk_rule=[0.5, 0.25, 0.125])


@pytest.fixture(scope="session")
def u0_3(ce3):
    return ce3.u0


def random_steps(rng, n_max=20, lo=0.0, hi=10.0, span=100.0):
    """Random nonnegative piecewise-constant function with zero tail."""
    n = int(rng.integers(1, n_max + 1))
    breaks = np.sort(rng.choice(np.linspace(0.0, span, 100001), n + 1, replace=False))
    values = rng.uniform(lo, hi, n)
    return PiecewiseFn.steps(breaks, values)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
