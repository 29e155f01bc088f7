import os
from pathlib import Path

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

from markerbridge import Backend

BRIDGE_ROOT = Path(__file__).parent.parent
REPO_ROOT = BRIDGE_ROOT.parent
FIXTURES = REPO_ROOT / "tests" / "fixtures"


@pytest.fixture(scope="session")
def backend():
    """Read-only tiny backend; training tests must load their own instance."""
    return Backend.load("tiny")


@pytest.fixture()
def fresh_backend():
    return Backend.load("tiny")
