import pytest
from hypothesis import HealthCheck, settings

from nestplan import build_mm, build_tiger, build_tiger_growl_only, build_uav
from nestplan.model import Frame

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def tiger():
    return build_tiger()


@pytest.fixture(scope="session")
def tiger_g():
    return build_tiger_growl_only()


@pytest.fixture(scope="session")
def mm():
    return build_mm()


@pytest.fixture(scope="session")
def uav():
    return build_uav()


@pytest.fixture
def tiger_frame_i(tiger):
    return Frame("i", tiger, 0.9, 1)


@pytest.fixture
def tiger_frame_j(tiger):
    return Frame("j", tiger, 0.9, 1)



def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = sorted(getattr(mod, "RESULTS", []))
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
