import numpy as np
import pytest

from srgmm import SeedTree, generate, make_params


def small_instance(k=3, d=5, N=300, delta=20.0, adversary=None, seed=0, **kw):
    root = SeedTree(seed)
    params = make_params(k, d, N, delta, stream=root.child("params"), **kw)
    return generate(params, adversary, root.child("instance"))


@pytest.fixture
def inst():
    return small_instance()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
