import numpy as np
import pytest
from hypothesis import settings

from scmaudit import load_model

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def xor_sel():
    return load_model("xor_sel")


@pytest.fixture
def or_sel():
    return load_model("or_sel")


@pytest.fixture
def xor_dependent():
    return load_model("xor_sel_dependent")


def rng_for(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
