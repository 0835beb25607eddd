"""Time-of-use rate lookup and billing."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from datetime import date, datetime, time
from typing import Protocol

import numpy as np

from .scenario import RateBand, TouRateSchedule


class RatedEnergy(Protocol):
    """Anything with a start time and an energy: sessions and buckets."""

    @property
    def start_time(self) -> time: ...

    @property
    def energy_kwh(self) -> float: ...


def matching_bands(moment: datetime, rates: TouRateSchedule) -> list[RateBand]:
    """All bands whose window contains ``moment``; a valid schedule yields one."""
    return [b for b in rates.bands_for(moment) if b.contains_hour(moment.hour)]


def band_at(moment: datetime, rates: TouRateSchedule) -> RateBand:
    """The unique band in force at ``moment``.

    Season comes from the month, day type from the weekday (Saturday and
    Sunday are weekend), band from the half-open hour window.
    """
    for band in rates.bands_for(moment):
        if band.contains_hour(moment.hour):
            return band
    raise LookupError(f"no rate band covers {moment.isoformat()}")  # unreachable once validated


def rate_at(moment: datetime, rates: TouRateSchedule) -> float:
    return band_at(moment, rates).rate_usd_per_kwh


def is_on_peak(moment: datetime, rates: TouRateSchedule) -> bool:
    return band_at(moment, rates).label == "on-peak"


def rates_for(timestamps: Iterable[datetime], rates: TouRateSchedule) -> np.ndarray:
    return np.array([rate_at(ts, rates) for ts in timestamps], dtype=float)


def bill_day(items: Iterable[RatedEnergy], rates: TouRateSchedule, day: date) -> float:
    """Daily energy bill in USD, each item rated at its start time on ``day``."""
    return sum(
        (item.energy_kwh * rate_at(datetime.combine(day, item.start_time), rates) for item in items),
        0.0,
    )


def bill_month(daily_bill_usd: float, billing_days: float = 30.0) -> float:
    return daily_bill_usd * billing_days


def series_cost(
    timestamps: Sequence[datetime],
    power_kw: Sequence[float] | np.ndarray,
    interval_minutes: float,
    rates: TouRateSchedule,
) -> float:
    """TOU cost of a power series held constant over each interval."""
    if len(timestamps) == 0:
        return 0.0
    energy_kwh = np.asarray(power_kw, dtype=float) * (interval_minutes / 60.0)
    return float(np.dot(energy_kwh, rates_for(timestamps, rates)))
