import os
from pathlib import Path

import pytest
from hypothesis import settings

from bsde_envelope import Generator

settings.register_profile("ci", deadline=None, max_examples=60, derandomize=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def power_gen():
    """g(z) = 3/2 |z|^(2/3) with A = B = 3/2, so C = 3/2."""
    return Generator.power_z(1.5, 2.0 / 3.0)


@pytest.fixture
def config_dir():
    return CONFIG_DIR


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""
    def record(number, passed, detail):
        line = f"acceptance {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
