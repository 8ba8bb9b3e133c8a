"""Pytest configuration for e2e tests."""

import numpy as np
import pytest

from chiral_circulator import ModelParams


@pytest.fixture(scope="session")
def params() -> ModelParams:
    """Fitted cavity-circulator parameters."""
    return ModelParams()


@pytest.fixture(scope="session")
def field_grid() -> np.ndarray:
    """The -40..40 mT sweep in 1 mT steps."""
    return np.arange(-40.0, 41.0, 1.0)


def pytest_configure(config):
    """Add e2e marker."""
    config.addinivalue_line("markers", "e2e: marks full-grid acceptance tests (slow)")
