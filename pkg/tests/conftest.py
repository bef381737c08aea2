import pytest

from gasvacuum.barenblatt import derive_constants
from gasvacuum.corrector import solve_corrector


@pytest.fixture(scope="session")
def p2():
    return derive_constants(2.0, 1.0)


@pytest.fixture(scope="session")
def path2_1e3():
    return solve_corrector(2.0, 1000.0, 1e-10)


@pytest.fixture(scope="session")
def path2_1e4():
    return solve_corrector(2.0, 1e4, 1e-10)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
