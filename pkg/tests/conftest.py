import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite", deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")


@pytest.fixture(scope="session")
def defaults():
    from resbeam.config import load_config
    return load_config()
