"""
Shared pytest configuration.
"""
import sys
import os

import pytest

# Add the project root to Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run tests that reproduce full-size presets")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size preset reproduction, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def output_dir(tmp_path):
    """Fresh output directory per test."""
    path = tmp_path / "out"
    path.mkdir()
    return path
