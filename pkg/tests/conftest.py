import numpy as np
import pytest

from varelim.problems import SEPARABLE_PROBLEMS, get_problem

PROBLEM_NAMES = sorted(SEPARABLE_PROBLEMS)


@pytest.fixture(params=PROBLEM_NAMES)
def builtin_problem(request):
    return get_problem(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rel_err(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.linalg.norm(a - b) / (1.0 + np.linalg.norm(a)))


# --- acceptance summary ------------------------------------------------------
_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    detail = dict(item.user_properties).get("detail", "")
    status = "PASS" if call.excinfo is None else "FAIL"
    _ACCEPTANCE[marker.args[0]] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {detail}")
