import numpy as np
import pytest

from tensorgap.ensembles import haar_unitary, stream

ACCEPTANCE = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def record():
    """Collects one line per acceptance criterion for the terminal summary."""

    def _record(name, ok, detail=""):
        ACCEPTANCE.append((name, bool(ok), detail))
        return ok

    return _record


def random_unitary(dim, seed):
    return haar_unitary(dim, stream(seed, 0))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
