"""Scenario tests for edge cases and determinism."""

import pytest

from ebess.bess import dispatch, sessions_to_profile
from ebess.errors import ScenarioError
from ebess.report import EXIT_INVALID, EXIT_OK, build_report, run_scenario
from ebess.scenario import dump_scenario, load_scenario, resolve_scenario
from ebess.scheduler import build_problem, optimize_schedule
from ebess.types import ChargeSchedule, NoRoot


def without_charging(scenario, **economics):
    """The scenario with every session and bucket removed."""
    econ = scenario.economics.model_copy(update={"daily_discharge_kwh": 780.0, **economics})
    return scenario.model_copy(
        update={"sessions": (), "daily_buckets": (), "economics": econ}
    )


class TestDeterminism:
    """Tests for deterministic behavior."""

    def test_schedule_deterministic(self, physics_scenario):
        """Repeated solves of the same problem return the same schedule."""
        problem = build_problem(physics_scenario, 0.0)
        results = [optimize_schedule(problem) for _ in range(5)]
        assert all(r == results[0] for r in results[1:])

    def test_dispatch_deterministic(self, base_scenario):
        day = base_scenario.horizon.operating_day
        load = sessions_to_profile(base_scenario.sessions, day, 5.0)
        bess = base_scenario.bess.to_spec(80.0, 500.0)
        runs = [dispatch(load, bess, base_scenario.tariff) for _ in range(5)]
        assert all(r == runs[0] for r in runs[1:])

    def test_report_deterministic(self, base_scenario):
        """Two reports of one scenario serialize identically."""
        first = build_report(base_scenario, run_id="r").report.model_dump_json()
        second = build_report(base_scenario, run_id="r").report.model_dump_json()
        assert first == second


class TestScenarioEdgeCases:
    """Tests for unusual but valid inputs."""

    def test_unquoted_clock_time_rejected(self, tmp_path):
        """YAML's base-60 reading of 06:00 is refused rather than misread."""
        text = resolve_scenario("la_route_ac").read_text(encoding="utf-8")
        path = tmp_path / "unquoted.yml"
        path.write_text(text.replace('start: "06:00"', "start: 06:00"), encoding="utf-8")
        with pytest.raises(ScenarioError, match="horizon.start"):
            load_scenario(path)

    def test_no_charging_energy(self, base_scenario):
        """Without sessions the BESS sizes to zero and saves nothing."""
        scenario = without_charging(base_scenario, ess_search=None)
        run = build_report(scenario)
        report = run.report
        assert run.exit_code == EXIT_OK
        assert report.bess.spec.capacity_kwh == 0
        assert report.bess.batteries_required == 0
        assert report.dispatch.daily_savings_usd == 0
        assert isinstance(report.irr, NoRoot)
        assert report.billing.daily_bill_usd == 0

    def test_no_charging_energy_needs_discharge(self, base_scenario):
        scenario = without_charging(base_scenario, ess_search=None, daily_discharge_kwh=None)
        with pytest.raises(ScenarioError, match="daily_discharge_kwh"):
            build_report(scenario)

    def test_nothing_financeable_fails_the_run(self, base_scenario, tmp_path):
        """An ESS search with no IRR anywhere is an input error."""
        path = tmp_path / "idle.yml"
        dump_scenario(without_charging(base_scenario), path)
        result = run_scenario(path, tmp_path / "out")
        assert result.exit_code == EXIT_INVALID
        assert "no financeable configuration" in result.error

    def test_empty_horizon(self, base_scenario):
        """Zero intervals with no distance target is a trivial schedule."""
        horizon = base_scenario.horizon.model_copy(update={"intervals": 0})
        scheduler = base_scenario.scheduler.model_copy(update={"min_total_distance_mi": 0.0})
        scenario = base_scenario.model_copy(update={"horizon": horizon, "scheduler": scheduler})
        run = build_report(scenario)
        assert run.exit_code == EXIT_OK
        assert isinstance(run.report.schedule, ChargeSchedule)
        assert run.report.schedule.decisions == ()
        assert run.report.schedule.total_cost_usd == 0
