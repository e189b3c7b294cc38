import os
from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def traj_path():
    def get(name: str) -> str:
        return os.path.join(FIXTURES, "traj", name)

    return get
