import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qslprobe.blackbox.device import default_device

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def device():
    return default_device()


@pytest.fixture(scope="session")
def quiet_device(device):
    """Default device without jitter or rounding."""
    return device.with_overheads(jitter_stddev=0.0, time_resolution=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one acceptance verdict; the lines are echoed after the run."""

    def record(number: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE[number] = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
