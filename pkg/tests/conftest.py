import pytest

from antvote.model import Prior, SignalModel, build_environment, signal_from_pair

# Lines recorded by the acceptance suite, printed once at the end of the session.
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def ex2() -> SignalModel:
    return SignalModel(0.7, 0.3, 0.2, 0.8)


@pytest.fixture
def sym80() -> SignalModel:
    return signal_from_pair(0.8, 0.8)


@pytest.fixture
def prior() -> Prior:
    return Prior(0.6, 0.4)


def ex2_env(n: int, alpha: float, gamma: float = 0.0):
    return build_environment({"n": n, "alpha": alpha, "gamma": gamma, "prior": {"pH": 0.6}, "signal": {"phH": 0.7, "phL": 0.2}})


@pytest.fixture
def make_env():
    return ex2_env


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
