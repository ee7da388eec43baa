import warnings

import numpy as np
import pytest
from hypothesis import settings

from batchlearn.subsetlp import ConstantsWarning

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet_constants_warning():
    # Desk-scale eps is far above the proved-constant regime; the warning is
    # covered by its own test.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstantsWarning)
        yield


def distributions(n_min=1, n_max=6):
    """Hypothesis strategy for probability vectors."""
    from hypothesis import strategies as st

    return st.integers(n_min, n_max).flatmap(
        lambda n: st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n)
    ).map(lambda w: np.asarray(w) / np.sum(w))


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion, then assert it."""

    def _report(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
