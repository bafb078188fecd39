"""Pytest configuration and shared fixtures."""

import sys
from fractions import Fraction
from unittest.mock import MagicMock

import numpy as np
import pytest

# Mock psutil BEFORE any app imports
psutil_mock = MagicMock()
psutil_mock.Process.return_value.memory_info.return_value = MagicMock(
    rss=104857600
)  # 100 MB
sys.modules["psutil"] = psutil_mock

# Now safe to import app modules
from app.config.settings import Settings  # noqa: E402
from app.theory.opt_core import State  # noqa: E402

test_settings = Settings(
    app_name="BCT Lab Test",
    app_version="0.1.0",
    log_level="DEBUG",
)

HALF = Fraction(1, 2)
UNIFORM_BIT = (HALF, HALF)
BIASED_BIT = (Fraction(9, 10), Fraction(1, 10))
PURE_BIT = (Fraction(1), Fraction(0))


@pytest.fixture(scope="session")
def test_settings_fixture() -> Settings:
    """Provide test settings."""
    return test_settings


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator, fresh for every test."""
    return np.random.default_rng(1234)


@pytest.fixture
def uniform_bit() -> tuple[Fraction, Fraction]:
    return UNIFORM_BIT


@pytest.fixture
def biased_bit() -> tuple[Fraction, Fraction]:
    return BIASED_BIT


@pytest.fixture
def pure_bit() -> tuple[Fraction, Fraction]:
    return PURE_BIT


@pytest.fixture
def uniform_state() -> State:
    """rho = 1/2 |1) + 1/2 |2)."""
    return State.from_distribution(UNIFORM_BIT)
