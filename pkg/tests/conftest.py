"""
Shared fixtures for the germlab test suite
"""
import json

import pytest

from germlab.constructions import build_bridge, build_example1, build_family_Xi
from germlab.config import settings

# Coarse grids keep the suite fast; every geometric feature used below spans several cells.
RESOLUTION = 64


@pytest.fixture(scope="session")
def example1():
    return build_example1(5)


@pytest.fixture(scope="session")
def bridge():
    return build_bridge(3, 2)


@pytest.fixture(scope="session")
def family():
    cache = {}

    def member(i):
        if i not in cache:
            cache[i] = build_family_Xi(i)
        return cache[i]

    return member


@pytest.fixture
def knot_table_copy(tmp_path):
    """Writable copy of the bundled knot table"""
    with open(settings.knot_table_file, "r", encoding="utf-8") as handle:
        table = json.load(handle)
    path = tmp_path / "knots.json"

    def write(**alexanders):
        for name, coefficients in alexanders.items():
            table["knots"][name]["alexander"] = coefficients
        path.write_text(json.dumps(table), encoding="utf-8")
        return path

    return write


@pytest.fixture
def resolution():
    return RESOLUTION
