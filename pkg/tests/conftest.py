from __future__ import annotations

from pathlib import Path

import pytest

from gazekit.events import parse_scenario

REPO = Path(__file__).resolve().parent.parent
SCENARIOS = REPO / "scenarios"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def fig3_scenario():
    return parse_scenario((SCENARIOS / "fig3_zebra.json").read_bytes())


@pytest.fixture(scope="session")
def glance_scenario():
    return parse_scenario((SCENARIOS / "glance_heavy.json").read_bytes())


@pytest.fixture(scope="session")
def listening_scenario():
    return parse_scenario((SCENARIOS / "long_listening.json").read_bytes())
