# tests/conftest.py

from pathlib import Path

import pytest
from click.testing import CliRunner
from dotenv import load_dotenv

from domain import storage
from domain.schemas import RiskLevel
from domain.settings import reset_settings
from test_helpers import make_gaussian_model2, make_model1, make_model2

REFERENCE_DIR = Path(__file__).resolve().parent.parent / "other" / "params"


@pytest.fixture(scope="session", autouse=True)
def load_env_for_tests():
    """
    Loads environment variables from the .env file for testing, then drops any
    cached settings so EVAR_* overrides are honoured.
    """
    load_dotenv()
    reset_settings()


@pytest.fixture(name="level")
def level_fixture() -> RiskLevel:
    """EVaR at 95% confidence."""
    return RiskLevel.from_confidence(0.95)


@pytest.fixture(name="model1")
def model1_fixture():
    return make_model1()


@pytest.fixture(name="model2")
def model2_fixture():
    return make_model2()


@pytest.fixture(name="gaussian_model2")
def gaussian_model2_fixture():
    """Three assets, no jumps."""
    return make_gaussian_model2()


@pytest.fixture(name="reference_model1")
def reference_model1_fixture():
    return storage.load_params(REFERENCE_DIR / "reference_model1.json")


@pytest.fixture(name="reference_model2")
def reference_model2_fixture():
    return storage.load_params(REFERENCE_DIR / "reference_model2.json")


@pytest.fixture(name="runner")
def runner_fixture() -> CliRunner:
    """
    Provides a click test runner that keeps stderr apart from stdout so the
    error documents can be parsed.
    """
    try:
        return CliRunner(mix_stderr=False)
    except TypeError:
        return CliRunner()
