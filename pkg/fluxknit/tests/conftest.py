"""Configuration for pytest."""

# These imports are needed for pytest to work properly
import logging
# Import pytest for its hooks and Config type
import pytest
from pytest import Config

# Import fixtures to make them available to all tests
# These imports are necessary for pytest to discover and register the fixtures
from fluxknit.tests.fixtures import (
    generator,
    stream,
    corrupt_u0,
)

# This function is never called but tells the type checker that these imports are used
# pyright: reportUnusedFunction=false
def _ensure_fixtures_are_used() -> None:
    """This function is never called but ensures type checkers know the fixtures are used."""
    _ = pytest.fixture
    _ = generator
    _ = stream
    _ = corrupt_u0

# Configure logging
logger = logging.getLogger(__name__)

def pytest_configure(config: Config):
    """Configure pytest."""
    config.addinivalue_line("markers", "slow: long Monte Carlo runs")
    logger.info("fluxknit test session configured")
