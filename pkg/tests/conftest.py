"""Global pytest configuration for hermetic test runs."""

from __future__ import annotations

import os
from datetime import date

import pytest

from ebess.scenario import Scenario, TouRateSchedule, load_scenario, resolve_scenario


def pytest_sessionstart(session):  # noqa: ARG001
    # Keep telemetry out of the working tree during tests.
    os.environ.setdefault("EBESS_TELEMETRY_DISABLED", "1")
    os.environ.pop("EBESS_SCENARIO_DIR", None)


JULY_WEDNESDAY = date(2024, 7, 17)


@pytest.fixture
def base_scenario() -> Scenario:
    return load_scenario(resolve_scenario("la_route_ac"))


@pytest.fixture
def literal_scenario() -> Scenario:
    return load_scenario(resolve_scenario("la_route_ac_paper"))


@pytest.fixture
def physics_scenario() -> Scenario:
    return load_scenario(resolve_scenario("la_route_ac_physics"))


@pytest.fixture
def rates(base_scenario: Scenario) -> TouRateSchedule:
    return base_scenario.tariff
