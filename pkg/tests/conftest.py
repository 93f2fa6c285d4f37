import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
sys.path.insert(0, str(TESTS_DIR))

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "leash" / "data"
TRACES_DIR = DATA_DIR / "traces"


@pytest.fixture(scope="session")
def profiles():
    from leash.abstraction import load_profiles

    return load_profiles((DATA_DIR / "profiles.json").read_text())


@pytest.fixture(scope="session")
def corpus():
    from leash.replay import load_traces

    return load_traces(TRACES_DIR)
