import numpy as np
import pytest

from first_crossing import Barrier, MCConfig, make_preset, simulate_paths


@pytest.fixture(scope="session")
def bm_barrier():
    return Barrier(2.0, 1.0)


@pytest.fixture(scope="session")
def bm_samples(bm_barrier):
    """20k bridge-corrected BM paths shared by the estimator tests."""
    cfg = MCConfig(dt=1e-3, n_paths=20_000, seed=11, bridge_correction=True)
    return simulate_paths(make_preset("BM_DRIFT", mu=1.0), bm_barrier, cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: numbered acceptance criteria")


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number][1])
