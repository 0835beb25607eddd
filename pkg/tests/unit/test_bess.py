"""Unit tests for BESS sizing and dispatch."""

from datetime import date, datetime, time, timedelta
from functools import cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebess.bess import (
    batteries_required,
    dispatch,
    peak_charge_energy,
    peak_simultaneous_power,
    sessions_to_profile,
    size_bess,
    summarize_dispatch,
)
from ebess.scenario import (
    BessSpec,
    ChargingSession,
    TouRateSchedule,
    load_scenario,
    resolve_scenario,
)
from ebess.tariff import is_on_peak
from ebess.types import DemandProfile

JULY_WEDNESDAY = date(2024, 7, 17)


@cache
def bundled_rates() -> TouRateSchedule:
    return load_scenario(resolve_scenario("la_route_ac")).tariff


def day_profile(power_kw, interval_minutes: float = 60) -> DemandProfile:
    midnight = datetime.combine(JULY_WEDNESDAY, time())
    step = timedelta(minutes=interval_minutes)
    return DemandProfile(
        timestamps=tuple(midnight + i * step for i in range(len(power_kw))),
        power_kw=tuple(float(p) for p in power_kw),
    )


def session(start: time, energy_kwh: float, power_kw: float = 500) -> ChargingSession:
    return ChargingSession(start_time=start, energy_kwh=energy_kwh, power_kw=power_kw)


class TestPeakChargeEnergy:
    """Tests for peak_charge_energy."""

    def test_published_buckets(self, base_scenario, rates):
        """Only the 4 pm evening bucket is on-peak."""
        assert peak_charge_energy(base_scenario.daily_buckets, rates, JULY_WEDNESDAY) == 20

    def test_sessions(self, base_scenario, rates):
        """The 16:00 and 17:15 sessions make 80 kWh."""
        assert peak_charge_energy(base_scenario.sessions, rates, JULY_WEDNESDAY) == 80

    def test_all_morning(self, rates):
        items = [session(time(10, 0), 50), session(time(10, 30), 40)]
        assert peak_charge_energy(items, rates, JULY_WEDNESDAY) == 0

    def test_single_evening_session(self, rates):
        assert peak_charge_energy([session(time(17, 0), 50)], rates, JULY_WEDNESDAY) == 50


class TestPeakSimultaneousPower:
    """Tests for peak_simultaneous_power."""

    def test_bundled_sessions(self, base_scenario, rates):
        """The two on-peak sessions do not overlap."""
        assert peak_simultaneous_power(base_scenario.sessions, rates, JULY_WEDNESDAY) == 500

    def test_overlap(self, rates):
        """A 300 kW session starting inside a 500 kW one stacks to 800 kW."""
        items = [session(time(17, 0), 50), session(time(17, 3), 30, power_kw=300)]
        assert peak_simultaneous_power(items, rates, JULY_WEDNESDAY) == 800

    def test_back_to_back(self, rates):
        """A session starting as another ends does not stack."""
        items = [session(time(17, 0), 50), session(time(17, 6), 50)]
        assert peak_simultaneous_power(items, rates, JULY_WEDNESDAY) == 500

    def test_buckets_have_no_power(self, base_scenario, rates):
        assert peak_simultaneous_power(base_scenario.daily_buckets, rates, JULY_WEDNESDAY) == 0


class TestSizeBess:
    """Tests for size_bess and batteries_required."""

    def test_from_buckets(self, base_scenario, rates):
        spec = size_bess(base_scenario.daily_buckets, rates, JULY_WEDNESDAY)
        assert spec.capacity_kwh == 20

    def test_nothing_on_peak(self, rates):
        spec = size_bess([session(time(10, 0), 50)], rates, JULY_WEDNESDAY)
        assert spec.capacity_kwh == 0
        assert spec.max_power_kw == 0

    def test_safety_factor(self, rates):
        """100 kWh with a 1.25 factor is 125 kWh."""
        spec = size_bess([session(time(17, 0), 100)], rates, JULY_WEDNESDAY, safety_factor=1.25)
        assert spec.capacity_kwh == 125

    def test_safety_factor_below_one(self, rates):
        with pytest.raises(ValueError, match="safety_factor"):
            size_bess([], rates, JULY_WEDNESDAY, safety_factor=0.9)

    def test_template_carries_costs(self, base_scenario, rates):
        spec = size_bess(base_scenario.sessions, rates, JULY_WEDNESDAY, template=base_scenario.bess)
        assert spec.capacity_kwh == 80
        assert spec.max_power_kw == 500
        assert spec.install_cost_usd == 40625

    @pytest.mark.parametrize(
        ("capacity", "expected"),
        [(0, 0), (20, 1), (80, 1), (120, 1), (240, 2), (241, 3)],
    )
    def test_modules(self, capacity, expected):
        assert batteries_required(capacity, 120) == expected


class TestSessionsToProfile:
    """Tests for sessions_to_profile."""

    def test_energy_conserved(self, base_scenario):
        profile = sessions_to_profile(base_scenario.sessions, JULY_WEDNESDAY, 1)
        assert len(profile) == 1440
        total = sum(profile.power_kw) * profile.interval_minutes / 60
        assert total == pytest.approx(sum(s.energy_kwh for s in base_scenario.sessions), rel=1e-9)

    def test_partial_interval(self):
        """A 6-minute 500 kW session averages 100 kW over a half hour."""
        profile = sessions_to_profile([session(time(17, 0), 50)], JULY_WEDNESDAY, 30)
        assert profile.power_kw[34] == pytest.approx(100.0)
        assert sum(profile.power_kw) == pytest.approx(100.0)

    def test_wraps_midnight(self):
        """A session running past midnight continues at the start of the day."""
        profile = sessions_to_profile([session(time(23, 50), 100, power_kw=60)], JULY_WEDNESDAY, 5)
        assert profile.power_kw[-1] == pytest.approx(60.0)
        assert profile.power_kw[0] == pytest.approx(60.0)
        assert profile.power_kw[17] == pytest.approx(60.0)
        assert profile.power_kw[18] == 0
        assert sum(profile.power_kw) * 5 / 60 == pytest.approx(100.0)

    def test_starts_at_midnight(self):
        profile = sessions_to_profile([], JULY_WEDNESDAY, 60)
        assert profile.timestamps[0] == datetime(2024, 7, 17)
        assert all(p == 0 for p in profile.power_kw)


class TestDispatch:
    """Tests for the greedy dispatch policy."""

    def test_zero_capacity(self, rates):
        """A degenerate BESS leaves the grid carrying everything."""
        load = day_profile([100.0] * 24)
        series = dispatch(load, BessSpec(capacity_kwh=0, max_power_kw=0), rates)
        assert all(s == 0 for s in series.battery_support_kw)
        assert series.grid_kw == load.power_kw
        assert all(r == 0 for r in series.bess_recharge_kw)

    def test_full_on_peak_coverage(self, rates):
        """Enough capacity and power takes every on-peak interval off the grid."""
        load = day_profile([100.0] * 24)
        series = dispatch(load, BessSpec(capacity_kwh=500, max_power_kw=100), rates)
        for ts, grid in zip(series.timestamps, series.grid_kw, strict=True):
            if is_on_peak(ts, rates):
                assert grid == 0

    def test_night_recharge(self, rates):
        """After the evening the BESS refills at full power until midnight."""
        load = day_profile([100.0] * 24)
        series = dispatch(load, BessSpec(capacity_kwh=500, max_power_kw=100), rates)
        assert series.bess_soc_kwh[21] == 0
        assert series.bess_recharge_kw[21:] == (100.0, 100.0, 100.0)
        assert series.bess_soc_kwh[-1] == 300
        assert series.grid_total_kw[21] == 200

    def test_grid_import_limit(self, rates):
        load = day_profile([100.0] * 24)
        series = dispatch(
            load, BessSpec(capacity_kwh=500, max_power_kw=100), rates, grid_import_limit_kw=150
        )
        assert series.bess_recharge_kw[21] == 50

    def test_power_limit(self, rates):
        """A 40 kW BESS shaves only 40 kW of a 100 kW evening load."""
        load = day_profile([100.0] * 24)
        series = dispatch(load, BessSpec(capacity_kwh=500, max_power_kw=40), rates)
        assert series.battery_support_kw[17] == 40
        assert series.grid_kw[17] == 60

    def test_idle_load(self, rates):
        """No load and a full BESS: every series is zero."""
        load = day_profile([0.0] * 24)
        series = dispatch(load, BessSpec(capacity_kwh=100, max_power_kw=50), rates)
        for values in (series.battery_support_kw, series.grid_kw, series.bess_recharge_kw):
            assert all(v == 0 for v in values)
        assert all(soc == 100 for soc in series.bess_soc_kwh)

    def test_initial_soc(self, rates):
        """A part-full BESS refills during the early off-peak hours."""
        load = day_profile([100.0] * 24)
        series = dispatch(load, BessSpec(capacity_kwh=500, max_power_kw=100), rates, 150)
        assert series.bess_soc_kwh[0] == 150
        assert series.bess_recharge_kw[:4] == (100.0, 100.0, 100.0, 50.0)
        assert series.bess_soc_kwh[4] == 500
        assert sum(series.battery_support_kw) == pytest.approx(500)

    @settings(max_examples=200, deadline=None)
    @given(
        interval=st.sampled_from([15, 30, 60]),
        data=st.data(),
        capacity=st.floats(0, 2000),
        power=st.floats(0, 1000),
        soc_fraction=st.floats(0, 1),
        efficiency=st.floats(0.5, 1.0),
    )
    def test_conservation_and_bounds(
        self, interval, data, capacity, power, soc_fraction, efficiency
    ):
        """Support plus grid equals load exactly and the SOC stays in bounds."""
        rates = bundled_rates()
        steps = 1440 // interval
        values = data.draw(
            st.lists(st.floats(0, 1000), min_size=steps, max_size=steps), label="load"
        )
        load = day_profile(values, interval)
        bess = BessSpec(
            capacity_kwh=capacity, max_power_kw=power, round_trip_efficiency=efficiency
        )
        series = dispatch(load, bess, rates, initial_soc_kwh=capacity * soc_fraction)
        dt_h = interval / 60

        assert len(series.bess_soc_kwh) == steps + 1
        for i in range(steps):
            support, grid = series.battery_support_kw[i], series.grid_kw[i]
            assert support + grid == load.power_kw[i]
            assert 0 <= support <= power * (1 + 1e-12) + 1e-12
            assert series.bess_recharge_kw[i] >= 0
        assert all(0 <= soc <= capacity for soc in series.bess_soc_kwh)

        supplied = sum(series.battery_support_kw) * dt_h
        refilled = sum(series.bess_recharge_kw) * dt_h * efficiency
        assert supplied <= series.bess_soc_kwh[0] + refilled + 1e-6 * max(1.0, capacity)

        summary = summarize_dispatch(series, rates)
        assert summary.on_peak_grid_kwh_with_bess <= summary.on_peak_grid_kwh_without_bess + 1e-9


class TestSummarizeDispatch:
    """Tests for summarize_dispatch."""

    def test_flat_day(self, rates):
        """A flat 100 kW day with a 500 kWh BESS saves $151."""
        load = day_profile([100.0] * 24)
        series = dispatch(load, BessSpec(capacity_kwh=500, max_power_kw=100), rates)
        summary = summarize_dispatch(series, rates)
        assert summary.load_energy_kwh == pytest.approx(2400)
        assert summary.support_energy_kwh == pytest.approx(500)
        assert summary.recharge_energy_kwh == pytest.approx(300)
        assert summary.grid_energy_kwh == pytest.approx(2200)
        assert summary.on_peak_grid_kwh_without_bess == pytest.approx(500)
        assert summary.on_peak_grid_kwh_with_bess == 0
        assert summary.peak_grid_kw_with_bess == 200
        assert summary.cost_without_bess_usd == pytest.approx(437.0)
        assert summary.cost_with_bess_usd == pytest.approx(286.0)
        assert summary.daily_savings_usd == pytest.approx(151.0)
