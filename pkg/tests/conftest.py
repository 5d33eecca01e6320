import functools

import pytest

from inv2scatter.potential import sym2
from inv2scatter.reference import smatrix_reference


@functools.lru_cache(maxsize=None)
def cached_reference(family_key, E, hbar):
    """Reference S-matrix cache shared across test modules."""
    from inv2scatter.potential import spec_from_dict
    fam, params = family_key
    return smatrix_reference(spec_from_dict({"family": fam, "params": list(params)}), E, hbar)


@pytest.fixture(scope="session")
def sym2_spec():
    return sym2()


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
