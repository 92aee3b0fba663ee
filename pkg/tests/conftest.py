import os
import time

import pytest

from hartree_min.grid import make_grid
from hartree_min.ground_state import solve_scalar_ground_state
from hartree_min.io import cache_path, save_ground_state

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def cache_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("gs-cache")
    old = os.environ.get("HARTREE_CACHE_DIR")
    os.environ["HARTREE_CACHE_DIR"] = str(root)
    yield root
    if old is None:
        os.environ.pop("HARTREE_CACHE_DIR", None)
    else:
        os.environ["HARTREE_CACHE_DIR"] = old


def _solve(n, root):
    t0 = time.perf_counter()
    gs = solve_scalar_ground_state(make_grid(n, 32.0))
    elapsed = time.perf_counter() - t0
    save_ground_state(gs, cache_path(n, 32.0, root))
    return gs, elapsed


@pytest.fixture(scope="session")
def gs48_timed(cache_root):
    return _solve(48, cache_root)


@pytest.fixture(scope="session")
def gs64_timed(cache_root):
    return _solve(64, cache_root)


@pytest.fixture(scope="session")
def gs48(gs48_timed):
    return gs48_timed[0]


@pytest.fixture(scope="session")
def gs64(gs64_timed):
    return gs64_timed[0]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
