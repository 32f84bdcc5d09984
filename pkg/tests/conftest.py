import pytest

from papaya import CostModel, WorkloadSpec

M = 16.0


def cost(alpha, beta, gamma, delta, method="original", device_memory=M):
    return CostModel.from_coefficients(alpha, beta, gamma, delta, device_memory, method)


@pytest.fixture
def reference_spec():
    return WorkloadSpec(alpha=0.10, beta=2.0, gamma=0.01, delta=0.5, device_memory=M)


@pytest.fixture
def baseline():
    return cost(0.10, 2.0, 0.010, 0.5)


@pytest.fixture
def mom_a():
    return cost(0.04, 2.0, 0.013, 0.5, "mom-a")


@pytest.fixture
def mom_b():
    return cost(0.02, 2.0, 0.012, 0.5, "mom-b")


# Acceptance tests record one line per criterion here; printed after the run.
CRITERIA: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
