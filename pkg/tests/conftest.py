import pytest

from fluidq.model import new_model

FIG_RATES = (0.3145, 0.8473)
C_LIST = (10.5, 20.5, 40.5)

# filled by tests/test_acceptance.py, printed at the end of the run
CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def fig_model():
    return new_model(*FIG_RATES, 10.5)


@pytest.fixture(scope="session")
def models():
    return {c: new_model(*FIG_RATES, c) for c in C_LIST}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
