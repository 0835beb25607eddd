"""Result and problem data types shared across the planner.

Scenario inputs live in :mod:`ebess.scenario` (pydantic, validated on load).
The types here are what the computational modules produce and exchange;
they are frozen dataclasses so results can be shared freely between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Literal

from .errors import DemandProfileError


@dataclass(frozen=True)
class TractionForces:
    """Resistance forces on one constant-speed leg, in newtons."""

    air_drag_n: float
    rolling_n: float
    climb_n: float
    net_n: float
    total_n: float  # net_n / efficiency
    efficiency: float


@dataclass(frozen=True)
class TripEnergy:
    """Energy drawn from the onboard battery for one leg."""

    traction_kwh: float
    aux_kwh: float
    total_kwh: float
    trip_duration_h: float


@dataclass(frozen=True)
class TractionResult:
    """Everything the traction model derives for a scenario's route."""

    gradient_deg: float
    meters_per_mile: float
    efficiency: float
    forces: TractionForces
    energy: TripEnergy


@dataclass(frozen=True)
class SchedulingProblem:
    """Single-bus, single-route charge/drive decision problem."""

    horizon_intervals: int
    interval_minutes: float
    initial_battery_kwh: float
    battery_capacity_kwh: float
    charge_energy_per_interval_kwh: float
    trip_energy_kwh: float
    leg_distance_mi: float
    min_total_distance_mi: float
    cost_per_interval: tuple[float, ...]
    objective_energy_coeff_kwh: float
    start: datetime | None = None

    def __post_init__(self) -> None:
        if self.horizon_intervals < 0:
            raise ValueError(f"horizon_intervals must be >= 0, got {self.horizon_intervals}")
        if len(self.cost_per_interval) != self.horizon_intervals:
            raise ValueError(
                f"cost_per_interval has {len(self.cost_per_interval)} entries, "
                f"expected {self.horizon_intervals}"
            )
        scalars = (
            self.interval_minutes,
            self.initial_battery_kwh,
            self.battery_capacity_kwh,
            self.charge_energy_per_interval_kwh,
            self.trip_energy_kwh,
            self.leg_distance_mi,
            self.min_total_distance_mi,
            self.objective_energy_coeff_kwh,
        )
        if not all(math.isfinite(v) for v in scalars):
            raise ValueError("scheduling problem parameters must be finite")
        if any(c < 0 or not math.isfinite(c) for c in self.cost_per_interval):
            raise ValueError("cost_per_interval entries must be finite and >= 0")
        if self.trip_energy_kwh < 0:
            raise ValueError("trip_energy_kwh must be >= 0")
        if self.charge_energy_per_interval_kwh < 0:
            raise ValueError("charge_energy_per_interval_kwh must be >= 0")
        if not 0 <= self.initial_battery_kwh <= self.battery_capacity_kwh:
            raise ValueError(
                "initial_battery_kwh must lie in [0, battery_capacity_kwh], got "
                f"{self.initial_battery_kwh} with capacity {self.battery_capacity_kwh}"
            )
        if self.leg_distance_mi <= 0:
            raise ValueError("leg_distance_mi must be > 0")
        if self.min_total_distance_mi < 0:
            raise ValueError("min_total_distance_mi must be >= 0")
        if self.objective_energy_coeff_kwh <= 0:
            raise ValueError("objective_energy_coeff_kwh must be > 0")
        if self.interval_minutes <= 0:
            raise ValueError("interval_minutes must be > 0")

    @property
    def required_trips(self) -> int:
        """Legs needed to reach the minimum distance (float slop tolerated)."""
        return max(0, math.ceil(self.min_total_distance_mi / self.leg_distance_mi - 1e-9))


@dataclass(frozen=True)
class ChargeSchedule:
    """An optimal decision vector and the trajectories it induces.

    ``decisions[t]`` is 1 when the bus charges during interval t and 0 when
    it drives one leg. Trajectories have one more entry than decisions
    (index 0 is the state before the first interval).
    """

    decisions: tuple[int, ...]
    battery_kwh: tuple[float, ...]
    distance_mi: tuple[float, ...]
    total_cost_usd: float
    trips_completed: int
    kind: Literal["schedule"] = "schedule"

    @property
    def charging_intervals(self) -> int:
        return sum(self.decisions)


@dataclass(frozen=True)
class Infeasible:
    """Certificate that no decision vector satisfies the constraints."""

    required_trips: int
    max_achievable_trips: int
    best_case_final_battery_kwh: float
    min_battery_deficit_kwh: float
    reason: str
    kind: Literal["infeasible"] = "infeasible"


@dataclass(frozen=True)
class ConstraintViolation:
    constraint: int
    interval: int | None
    message: str

    def __str__(self) -> str:
        where = f" @ t={self.interval}" if self.interval is not None else ""
        return f"constraint {self.constraint}{where}: {self.message}"


@dataclass(frozen=True)
class DemandProfile:
    """Uniformly spaced power samples (kW), e.g. a site or charging load."""

    timestamps: tuple[datetime, ...]
    power_kw: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.timestamps) != len(self.power_kw):
            raise DemandProfileError(
                f"{len(self.timestamps)} timestamps but {len(self.power_kw)} power samples"
            )
        if len(self.timestamps) < 2:
            raise DemandProfileError("at least 2 samples required")

        interval = (self.timestamps[1] - self.timestamps[0]).total_seconds()
        # Rows are numbered from 1 (first data row after the header).
        for row in range(2, len(self.timestamps) + 1):
            delta = (self.timestamps[row - 1] - self.timestamps[row - 2]).total_seconds()
            if delta <= 0:
                raise DemandProfileError(f"row {row}: timestamps not strictly increasing")
            if abs(delta - interval) > 1.0:
                raise DemandProfileError(
                    f"row {row}: spacing {delta / 60:g} min differs from {interval / 60:g} min"
                )
        for row, value in enumerate(self.power_kw, start=1):
            if not math.isfinite(value):
                raise DemandProfileError(f"row {row}: power_kw is not a finite number")
            if value < 0:
                raise DemandProfileError(f"row {row}: negative power {value} kW")

    @property
    def interval_minutes(self) -> float:
        return (self.timestamps[1] - self.timestamps[0]).total_seconds() / 60.0

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True)
class DispatchSeries:
    """Per-interval split of the charging load between BESS and grid.

    ``grid_kw`` is the grid share of the charging load, so
    ``load_kw[i] == battery_support_kw[i] + grid_kw[i]`` holds exactly.
    Power drawn from the grid to refill the BESS is reported separately in
    ``bess_recharge_kw``; the metered grid draw is the sum of the two.
    """

    timestamps: tuple[datetime, ...]
    interval_minutes: float
    load_kw: tuple[float, ...]
    battery_support_kw: tuple[float, ...]
    grid_kw: tuple[float, ...]
    bess_recharge_kw: tuple[float, ...]
    bess_soc_kwh: tuple[float, ...]  # len(timestamps) + 1

    @property
    def grid_total_kw(self) -> tuple[float, ...]:
        return tuple(g + r for g, r in zip(self.grid_kw, self.bess_recharge_kw, strict=True))

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True)
class DispatchSummary:
    """Daily energy and cost totals of a dispatch run."""

    load_energy_kwh: float
    support_energy_kwh: float
    recharge_energy_kwh: float
    grid_energy_kwh: float  # includes recharge
    on_peak_grid_kwh_without_bess: float
    on_peak_grid_kwh_with_bess: float
    peak_grid_kw_without_bess: float
    peak_grid_kw_with_bess: float
    cost_without_bess_usd: float
    cost_with_bess_usd: float
    daily_savings_usd: float


@dataclass(frozen=True)
class LifetimeMetrics:
    """Warranty, lifetime discharge and break-even figures for a BESS."""

    daily_discharge_kwh: float
    annual_discharge_kwh: float
    warranty_period_years: float
    lifetime_discharge_kwh: float
    cost_per_kwh_usd: float
    daily_battery_cost_usd: float
    breakeven_install_cost_usd: float


@dataclass(frozen=True)
class IrrProblem:
    """Net upfront cost against a run of annual cashflows."""

    upfront_usd: float
    incentives_usd: float
    annual_cashflows_usd: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.annual_cashflows_usd:
            raise ValueError("at least one annual cashflow is required")
        if self.incentives_usd < 0:
            raise ValueError("incentives_usd must be >= 0")
        if self.upfront_usd < self.incentives_usd:
            raise ValueError("upfront_usd must be >= incentives_usd")

    @property
    def horizon_years(self) -> int:
        return len(self.annual_cashflows_usd)

    @property
    def net_upfront_usd(self) -> float:
        return self.upfront_usd - self.incentives_usd


@dataclass(frozen=True)
class NoRoot:
    """The NPV function has no sign change on the search bracket."""

    reason: str
    npv_at_lower: float
    npv_at_upper: float
    kind: Literal["no_root"] = "no_root"


@dataclass(frozen=True)
class EssEvaluation:
    energy_kwh: float
    power_kw: float
    irr: float | None  # None when no root


@dataclass(frozen=True)
class EssSizing:
    """Outcome of the IRR-maximizing ESS size search."""

    energy_kwh: float
    power_kw: float
    irr: float
    evaluations: tuple[EssEvaluation, ...] = field(default_factory=tuple)
