"""
tests/conftest.py

Shared pytest setup: src/ packages (and the repo root for the FastAPI app)
are imported top-level, the way the entry points import them.

Learning and trend checks take minutes; they are marked `slow` and only run
with --runslow.
"""

import sys
from pathlib import Path

import pytest

SRC_DIR = Path(__file__).resolve().parents[1]
REPO_ROOT = SRC_DIR.parent

for path in (REPO_ROOT, SRC_DIR):
    if str(path) not in sys.path:
        sys.path.insert(0, str(path))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running learning or sweep test")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def sample_turn_counts() -> Path:
    return REPO_ROOT / "data" / "sample_turn_counts_synthetic.csv"
