import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from windadjust import _core

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

SR = 16000.0


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["compiled", "numpy"])
def backend(request, monkeypatch):
    """Run a test once per kernel backend."""
    mod = _core.compiled if request.param == "compiled" else _core.fallback
    if mod is None:
        pytest.skip("compiled kernels not built")
    for name in ("analysis_step", "synthesis_step", "irls_quantile", "soft_threshold_blocks"):
        monkeypatch.setattr(_core, name, getattr(mod, name))
    return request.param


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for num in sorted(results):
            terminalreporter.write_line(results[num])
