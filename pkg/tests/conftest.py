"""
Shared fixtures
"""
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from echelon.agents.state_schema import IntervalSpec  # noqa: E402
from echelon.tools.wake import WakeBenefit, WakeParams  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: acceptance-size scans and restart batches')


@pytest.fixture
def goose():
    return WakeParams.goose()


@pytest.fixture
def wake(goose):
    return WakeBenefit(goose)


@pytest.fixture
def narrow():
    return IntervalSpec(alpha_s=0.5, alpha_l=3.5)


@pytest.fixture
def shifted():
    return IntervalSpec(alpha_s=2.5, alpha_l=7.0)


@pytest.fixture
def wide():
    return IntervalSpec(alpha_s=0.5, alpha_l=14.0)
