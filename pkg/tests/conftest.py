import pytest

from hodeinfer.simulation import SimConfig, generate_dataset

ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: numbered acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line[1])


@pytest.fixture
def acceptance_log():
    """Record one pass/fail line per numbered criterion for the terminal summary."""

    def log(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return passed

    return log


@pytest.fixture(scope="session")
def vdp_data_100():
    x, y, truth = generate_dataset(SimConfig(n=100, replications=1), 0)
    return x, y


@pytest.fixture(scope="session")
def vdp_noiseless_200():
    x, y, truth = generate_dataset(SimConfig(n=200, sigma0=0.0, replications=1), 0)
    return x, y
