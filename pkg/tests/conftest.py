from pathlib import Path

import pytest

from hcif.syntax import load_model
from hcif.trace import initial_valuation

MODELS = Path(__file__).resolve().parent.parent / "src" / "hcif" / "models"
BUNDLED = sorted(MODELS.glob("*.hcif"))


def model_path(name: str) -> Path:
    return MODELS / f"{name}.hcif"


def load(name: str, augment: bool = True):
    return load_model(model_path(name), augment=augment)


@pytest.fixture
def thermostat():
    return load("thermostat")


@pytest.fixture
def thermostat_hier():
    return load("thermostat_hier")


@pytest.fixture
def thermostat_flat():
    return load("thermostat_flat")


def sigma_of(model, **values):
    return initial_valuation(model, values)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
