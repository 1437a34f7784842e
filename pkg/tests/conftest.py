import pytest
from hypothesis import HealthCheck, settings

from sdnfence import blocklist_fixture, monitoring_fixture, two_switch_fixture

settings.register_profile(
    "suite",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture
def two_switch():
    return two_switch_fixture()


@pytest.fixture
def blocklist():
    return blocklist_fixture()


@pytest.fixture
def monitoring():
    return monitoring_fixture()


@pytest.fixture
def deployed(two_switch):
    return two_switch.deploy()
