import json
from pathlib import Path

import pytest
from hypothesis import settings

# property tests run numerical code; per-example deadlines just flake
settings.register_profile("numerics", deadline=None, max_examples=50)
settings.load_profile("numerics")

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def bessel_table():
    """Frozen high-precision K0/K1 reference values (see scripts/make_bessel_tables.py)."""
    with open(DATA / "bessel_oracle.json") as fh:
        return json.load(fh)
