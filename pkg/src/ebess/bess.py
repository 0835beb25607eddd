"""Stationary battery sizing and dispatch for peak shaving.

The BESS is sized to carry the on-peak share of the day's charging energy
and dispatched greedily: it supplies the charging load during on-peak
bands and refills from the grid during off-peak bands.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from datetime import date, datetime, time, timedelta

import numpy as np

from .scenario import BessSettings, BessSpec, ChargingSession, TouRateSchedule
from .tariff import RatedEnergy, band_at, is_on_peak, series_cost
from .types import DemandProfile, DispatchSeries, DispatchSummary

MINUTES_PER_DAY = 1440.0


def _on_peak(item: RatedEnergy, rates: TouRateSchedule, day: date) -> bool:
    return is_on_peak(datetime.combine(day, item.start_time), rates)


def peak_charge_energy(items: Iterable[RatedEnergy], rates: TouRateSchedule, day: date) -> float:
    """Charging energy whose start falls in an on-peak band on ``day``."""
    return sum((i.energy_kwh for i in items if _on_peak(i, rates, day)), 0.0)


def peak_simultaneous_power(
    items: Iterable[RatedEnergy], rates: TouRateSchedule, day: date
) -> float:
    """Largest total power of on-peak sessions running at the same instant.

    Items without a power rating (energy buckets) contribute nothing.
    """
    events: list[tuple[float, float]] = []
    for item in items:
        if not isinstance(item, ChargingSession) or not _on_peak(item, rates, day):
            continue
        start = item.start_time.hour * 60 + item.start_time.minute + item.start_time.second / 60
        end = start + item.duration_h * 60
        if end <= start:
            continue
        events.append((start, item.power_kw))
        events.append((end, -item.power_kw))

    # Ends sort before starts at the same instant: back-to-back sessions do not overlap.
    events.sort(key=lambda e: (e[0], e[1]))
    running = peak = 0.0
    for _, delta in events:
        running += delta
        peak = max(peak, running)
    return peak


def size_bess(
    items: Sequence[RatedEnergy],
    rates: TouRateSchedule,
    day: date,
    safety_factor: float = 1.0,
    template: BessSettings | None = None,
) -> BessSpec:
    """Capacity from on-peak charging energy, power from peak simultaneous load."""
    if safety_factor < 1:
        raise ValueError(f"safety_factor must be >= 1, got {safety_factor}")
    template = template or BessSettings()
    return template.to_spec(
        capacity_kwh=peak_charge_energy(items, rates, day) * safety_factor,
        max_power_kw=peak_simultaneous_power(items, rates, day),
    )


def batteries_required(capacity_kwh: float, module_kwh: float) -> int:
    return math.ceil(capacity_kwh / module_kwh - 1e-9) if capacity_kwh > 0 else 0


def sessions_to_profile(
    sessions: Iterable[ChargingSession], day: date, interval_minutes: float
) -> DemandProfile:
    """Average charging power per interval over one day, starting at midnight.

    Sessions running past midnight wrap to the start of the same day, so the
    profile describes a repeating daily pattern. Energy is conserved.
    """
    steps = round(MINUTES_PER_DAY / interval_minutes)
    lo = np.arange(steps) * interval_minutes
    hi = lo + interval_minutes
    energy_kwh = np.zeros(steps)

    for s in sessions:
        start = s.start_time.hour * 60 + s.start_time.minute + s.start_time.second / 60
        remaining = s.duration_h * 60
        while remaining > 0:
            span = min(remaining, MINUTES_PER_DAY - start)
            overlap = np.clip(np.minimum(hi, start + span) - np.maximum(lo, start), 0.0, None)
            energy_kwh += s.power_kw * overlap / 60.0
            remaining -= span
            start = 0.0

    midnight = datetime.combine(day, time())
    step = timedelta(minutes=interval_minutes)
    return DemandProfile(
        timestamps=tuple(midnight + i * step for i in range(steps)),
        power_kw=tuple(float(p) for p in energy_kwh / (interval_minutes / 60.0)),
    )


def dispatch(
    load: DemandProfile,
    bess: BessSpec,
    rates: TouRateSchedule,
    initial_soc_kwh: float | None = None,
    grid_import_limit_kw: float | None = None,
) -> DispatchSeries:
    """Greedy peak-shaving dispatch.

    On-peak: the BESS supplies min(load, max power, energy left this interval).
    Off-peak: the BESS refills from the grid at up to max power, limited by
    headroom and by the grid import limit. Mid-peak: idle.
    """
    dt_h = load.interval_minutes / 60.0
    eta = bess.round_trip_efficiency
    capacity = bess.capacity_kwh
    soc = capacity if initial_soc_kwh is None else min(max(initial_soc_kwh, 0.0), capacity)
    limit = math.inf if grid_import_limit_kw is None else grid_import_limit_kw

    support_kw: list[float] = []
    grid_kw: list[float] = []
    recharge_kw: list[float] = []
    soc_kwh = [soc]

    for ts, demand in zip(load.timestamps, load.power_kw, strict=True):
        label = band_at(ts, rates).label
        support = recharge = 0.0
        grid = demand

        if label == "on-peak" and capacity > 0:
            support = min(demand, bess.max_power_kw, soc / dt_h)
            grid = demand - support
            # Re-derive support so demand == support + grid holds exactly in floats.
            support = demand - grid
        elif label == "off-peak" and capacity > 0:
            headroom_kw = (capacity - soc) / (dt_h * eta)
            recharge = max(0.0, min(bess.max_power_kw, headroom_kw, limit - demand))

        soc = min(max(soc - support * dt_h + recharge * dt_h * eta, 0.0), capacity)

        support_kw.append(support)
        grid_kw.append(grid)
        recharge_kw.append(recharge)
        soc_kwh.append(soc)

    return DispatchSeries(
        timestamps=load.timestamps,
        interval_minutes=load.interval_minutes,
        load_kw=load.power_kw,
        battery_support_kw=tuple(support_kw),
        grid_kw=tuple(grid_kw),
        bess_recharge_kw=tuple(recharge_kw),
        bess_soc_kwh=tuple(soc_kwh),
    )


def summarize_dispatch(series: DispatchSeries, rates: TouRateSchedule) -> DispatchSummary:
    """Daily energy totals and the TOU cost with and without the BESS."""
    dt_h = series.interval_minutes / 60.0
    load = np.asarray(series.load_kw, dtype=float)
    support = np.asarray(series.battery_support_kw, dtype=float)
    recharge = np.asarray(series.bess_recharge_kw, dtype=float)
    grid_total = np.asarray(series.grid_kw, dtype=float) + recharge
    on_peak = np.array([is_on_peak(ts, rates) for ts in series.timestamps], dtype=bool)

    cost_without = series_cost(series.timestamps, load, series.interval_minutes, rates)
    cost_with = series_cost(series.timestamps, grid_total, series.interval_minutes, rates)

    return DispatchSummary(
        load_energy_kwh=float(load.sum() * dt_h),
        support_energy_kwh=float(support.sum() * dt_h),
        recharge_energy_kwh=float(recharge.sum() * dt_h),
        grid_energy_kwh=float(grid_total.sum() * dt_h),
        on_peak_grid_kwh_without_bess=float(load[on_peak].sum() * dt_h),
        on_peak_grid_kwh_with_bess=float(grid_total[on_peak].sum() * dt_h),
        peak_grid_kw_without_bess=float(load.max(initial=0.0)),
        peak_grid_kw_with_bess=float(grid_total.max(initial=0.0)),
        cost_without_bess_usd=cost_without,
        cost_with_bess_usd=cost_with,
        daily_savings_usd=cost_without - cost_with,
    )
