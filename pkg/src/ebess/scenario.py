"""Scenario schema for e-bus charging and stationary storage planning.

A scenario is one YAML document describing the bus, its route, the
chargers, the time-of-use tariff, the charging sessions of a typical day,
the stationary battery (BESS) and the economics inputs. The bundled
``la_route_ac`` scenario is the reference example; docs/SCENARIOS.md
documents every field.

All models are frozen: a loaded Scenario is safe to share between threads.
"""

from __future__ import annotations

from collections.abc import Iterator
from datetime import date, datetime, time, timedelta
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from .errors import ScenarioError

BUNDLED_SCENARIO_DIR = Path(__file__).parent / "scenarios"

METERS_PER_MILE = 1609.34
PAPER_METERS_PER_MILE = 1600.0
PAPER_OBJECTIVE_COEFF_KWH = 200.0
DEFAULT_DRIVETRAIN_STAGES = (0.97, 0.97, 0.97)

BandLabel = Literal["off-peak", "mid-peak", "on-peak"]


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)


def _reject_unquoted_clock(value: Any) -> Any:
    # YAML 1.1 reads an unquoted 12:30 as the base-60 integer 750.
    if isinstance(value, int) and not isinstance(value, bool):
        raise ValueError("clock times must be quoted 'HH:MM' strings")
    return value


class PaperCompat(_Frozen):
    """Switches that reproduce the source arithmetic bit-for-bit."""

    mile_factor: bool = False
    objective_coeff: bool = False
    rounding: bool = False

    @property
    def meters_per_mile(self) -> float:
        return PAPER_METERS_PER_MILE if self.mile_factor else METERS_PER_MILE

    @classmethod
    def all_on(cls) -> PaperCompat:
        return cls(mile_factor=True, objective_coeff=True, rounding=True)


class BusSpec(_Frozen):
    """Vehicle parameters for the traction model."""

    mass_kg: float = Field(gt=0)
    height_m: float = Field(gt=0)
    width_m: float = Field(gt=0)
    drag_coefficient: float = Field(gt=0)
    frontal_area_m2: float = Field(gt=0)
    aux_power_kw: float = Field(ge=0)
    onboard_battery_kwh: float = Field(gt=0)
    battery_type_label: str = ""
    drivetrain_stages: tuple[float, ...] = DEFAULT_DRIVETRAIN_STAGES

    @model_validator(mode="before")
    @classmethod
    def derive_frontal_area(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("frontal_area_m2") is None:
            height, width = data.get("height_m"), data.get("width_m")
            if isinstance(height, int | float) and isinstance(width, int | float):
                data = {**data, "frontal_area_m2": height * width}
        return data

    @field_validator("drivetrain_stages")
    @classmethod
    def validate_stages(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if not v:
            raise ValueError("at least one drivetrain stage is required")
        for stage in v:
            if not 0 < stage <= 1:
                raise ValueError(f"stage efficiency {stage} outside (0, 1]")
        return v


class RouteProfile(_Frozen):
    """One constant-speed leg between charging stops."""

    leg_distance_mi: float = Field(gt=0)
    average_speed_mph: float = Field(gt=0)
    elevation_start_m: float
    elevation_end_m: float
    air_density_kg_m3: float = Field(gt=0)
    rolling_coefficient: float = Field(ge=0)
    gravity_m_s2: float = Field(default=9.81, gt=0)
    # Explicit gradient; derived from the elevations when omitted.
    gradient_deg: float | None = Field(default=None, gt=-90, lt=90)


class RateBand(_Frozen):
    """Half-open wall-clock window [start_hour, end_hour), wrapping past midnight."""

    start_hour: int = Field(ge=0, le=23)
    end_hour: int = Field(ge=0, le=24)
    rate_usd_per_kwh: float = Field(ge=0)
    label: BandLabel

    @model_validator(mode="after")
    def validate_window(self) -> RateBand:
        if self.start_hour == self.end_hour % 24 and self.end_hour != 24:
            raise ValueError(
                f"band {self.start_hour}->{self.end_hour} is empty; use 0->24 for a full day"
            )
        return self

    def hours(self) -> list[int]:
        if self.start_hour < self.end_hour:
            return list(range(self.start_hour, self.end_hour))
        return list(range(self.start_hour, 24)) + list(range(0, self.end_hour))

    def contains_hour(self, hour: int) -> bool:
        if self.start_hour < self.end_hour:
            return self.start_hour <= hour < self.end_hour
        return hour >= self.start_hour or hour < self.end_hour


def _check_day_coverage(bands: tuple[RateBand, ...]) -> None:
    counts = [0] * 24
    for band in bands:
        for hour in band.hours():
            counts[hour] += 1
    if not bands or any(c == 0 for c in counts):
        gaps = [h for h, c in enumerate(counts) if c == 0]
        detail = f" (uncovered hours: {', '.join(map(str, gaps))})" if bands else ""
        raise ValueError(f"bands must cover 24 hours{detail}")
    overlaps = [h for h, c in enumerate(counts) if c > 1]
    if overlaps:
        raise ValueError(f"bands overlap at hours {', '.join(map(str, overlaps))}")


def _format_months(months: set[int]) -> str:
    """Render month numbers as cyclic runs, e.g. {10, 11, 12, 1} -> '10..1'."""
    if len(months) == 12:
        return "1..12"
    runs: list[str] = []
    for m in range(1, 13):
        prev = 12 if m == 1 else m - 1
        if m not in months or prev in months:
            continue
        end = m
        while (end % 12) + 1 in months:
            end = (end % 12) + 1
        runs.append(str(m) if end == m else f"{m}..{end}")
    return ", ".join(runs)


class Season(_Frozen):
    name: str = ""
    months: tuple[int, ...]
    weekday_bands: tuple[RateBand, ...]
    weekend_bands: tuple[RateBand, ...]

    @field_validator("months")
    @classmethod
    def validate_months(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v:
            raise ValueError("a season needs at least one month")
        bad = [m for m in v if not 1 <= m <= 12]
        if bad:
            raise ValueError(f"month numbers must be 1..12, got {bad}")
        if len(set(v)) != len(v):
            raise ValueError("months listed more than once")
        return v

    @field_validator("weekday_bands", "weekend_bands")
    @classmethod
    def validate_bands(cls, v: tuple[RateBand, ...]) -> tuple[RateBand, ...]:
        _check_day_coverage(v)
        return v


class TouRateSchedule(_Frozen):
    """Seasonal weekday/weekend rate bands in $/kWh."""

    name: str = ""
    seasons: tuple[Season, ...]

    @field_validator("seasons")
    @classmethod
    def validate_seasons(cls, v: tuple[Season, ...]) -> tuple[Season, ...]:
        seen: dict[int, str] = {}
        for season in v:
            for m in season.months:
                if m in seen:
                    raise ValueError(f"month {m} assigned to more than one season")
                seen[m] = season.name
        uncovered = set(range(1, 13)) - set(seen)
        if uncovered:
            noun = "months" if len(uncovered) > 1 else "month"
            raise ValueError(f"{noun} {_format_months(uncovered)} uncovered")
        return v

    def season_for(self, month: int) -> Season:
        for season in self.seasons:
            if month in season.months:
                return season
        raise KeyError(month)  # unreachable once validated

    def bands_for(self, moment: datetime) -> tuple[RateBand, ...]:
        season = self.season_for(moment.month)
        return season.weekend_bands if moment.weekday() >= 5 else season.weekday_bands


class Charger(_Frozen):
    name: str
    kind: Literal["en-route", "depot"]
    power_kw: float = Field(gt=0)
    location_label: str = ""


class ChargingSession(_Frozen):
    """One charging event of the operating day."""

    start_time: time
    energy_kwh: float = Field(ge=0)
    power_kw: float = Field(gt=0)
    location_label: str = ""

    @field_validator("start_time", mode="before")
    @classmethod
    def require_quoted_time(cls, v: Any) -> Any:
        return _reject_unquoted_clock(v)

    @property
    def duration_h(self) -> float:
        return self.energy_kwh / self.power_kw


class EnergyBucket(_Frozen):
    """Pre-aggregated energy for a window of the day, rated at its start."""

    label: str
    start_time: time
    energy_kwh: float = Field(ge=0)

    @field_validator("start_time", mode="before")
    @classmethod
    def require_quoted_time(cls, v: Any) -> Any:
        return _reject_unquoted_clock(v)


class Horizon(_Frozen):
    """The scheduler's operating window: ``intervals`` slots from ``start``."""

    operating_day: date
    start: time = time(6, 0)
    intervals: int = Field(default=24, ge=0)
    interval_minutes: float = Field(default=30.0, gt=0)

    @field_validator("start", mode="before")
    @classmethod
    def require_quoted_time(cls, v: Any) -> Any:
        return _reject_unquoted_clock(v)

    @property
    def start_datetime(self) -> datetime:
        return datetime.combine(self.operating_day, self.start)

    def interval_starts(self) -> Iterator[datetime]:
        step = timedelta(minutes=self.interval_minutes)
        for t in range(self.intervals):
            yield self.start_datetime + t * step


class SchedulerSettings(_Frozen):
    initial_battery_kwh: float = Field(ge=0)
    battery_capacity_kwh: float = Field(gt=0)
    # Derived from the en-route charger power when omitted.
    charge_energy_per_interval_kwh: float | None = Field(default=None, ge=0)
    # Derived from the traction model when omitted.
    trip_energy_kwh: float | None = Field(default=None, gt=0)
    min_total_distance_mi: float = Field(ge=0)
    objective_energy_coeff_kwh: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def validate_initial(self) -> SchedulerSettings:
        if self.initial_battery_kwh > self.battery_capacity_kwh:
            raise ValueError("initial_battery_kwh exceeds battery_capacity_kwh")
        return self


class BessSpec(_Frozen):
    """A stationary battery as installed."""

    capacity_kwh: float = Field(ge=0)
    max_power_kw: float = Field(ge=0)
    warranted_throughput_mwh: float = Field(default=600.0, gt=0)
    round_trip_efficiency: float = Field(default=1.0, gt=0, le=1)
    install_cost_usd: float = Field(default=0.0, ge=0)
    incentives_usd: float = Field(default=0.0, ge=0)


class BessSettings(_Frozen):
    """Scenario-side BESS inputs; capacity and power are sized when omitted."""

    capacity_kwh: float | None = Field(default=None, ge=0)
    max_power_kw: float | None = Field(default=None, ge=0)
    warranted_throughput_mwh: float = Field(default=600.0, gt=0)
    round_trip_efficiency: float = Field(default=1.0, gt=0, le=1)
    install_cost_usd: float = Field(default=0.0, ge=0)
    incentives_usd: float = Field(default=0.0, ge=0)
    safety_factor: float = Field(default=1.0, ge=1)
    module_kwh: float = Field(default=120.0, gt=0)
    initial_soc_fraction: float = Field(default=1.0, ge=0, le=1)
    sizing_source: Literal["sessions", "buckets", "schedule"] = "sessions"

    def to_spec(self, capacity_kwh: float, max_power_kw: float) -> BessSpec:
        return BessSpec(
            capacity_kwh=capacity_kwh,
            max_power_kw=max_power_kw,
            warranted_throughput_mwh=self.warranted_throughput_mwh,
            round_trip_efficiency=self.round_trip_efficiency,
            install_cost_usd=self.install_cost_usd,
            incentives_usd=self.incentives_usd,
        )


class DispatchSettings(_Frozen):
    interval_minutes: float = Field(default=1.0, gt=0)
    demand_profile_csv: str | None = None
    grid_import_limit_kw: float | None = Field(default=None, ge=0)

    @field_validator("interval_minutes")
    @classmethod
    def validate_divides_day(cls, v: float) -> float:
        steps = 1440.0 / v
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError(f"interval_minutes {v} does not divide a 24-hour day")
        if round(steps) < 2:
            raise ValueError("interval_minutes must leave at least 2 intervals per day")
        return v


class EssSearchSettings(_Frozen):
    energy_levels_kwh: tuple[float, ...]
    power_ratios: tuple[float, ...]

    @field_validator("energy_levels_kwh")
    @classmethod
    def validate_levels(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if not v:
            raise ValueError("at least one energy level is required")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("energy levels must be strictly ascending")
        if v[0] <= 0:
            raise ValueError("energy levels must be > 0")
        return v

    @field_validator("power_ratios")
    @classmethod
    def validate_ratios(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if not v:
            raise ValueError("at least one power ratio is required")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("power ratios must be strictly descending")
        if v[-1] <= 0:
            raise ValueError("power ratios must be > 0")
        return v


class EconomicsSettings(_Frozen):
    billing_days_per_month: float = Field(default=30.0, gt=0)
    # Defaults to the total energy of the day's buckets (or sessions).
    daily_discharge_kwh: float | None = Field(default=None, gt=0)
    annual_net_income_usd: float = 0.0
    horizon_years: int = Field(default=10, ge=1)
    install_cost_per_kwh_usd: float = Field(default=600.0, ge=0)
    power_cost_per_kw_usd: float = Field(default=0.0, ge=0)
    om_cost_usd_per_year: float = Field(default=0.0, ge=0)
    ess_search: EssSearchSettings | None = None


class Scenario(_Frozen):
    """Root configuration of one planning run."""

    name: str = Field(min_length=1)
    description: str = ""
    paper_compat: PaperCompat = Field(default_factory=PaperCompat)
    bus: BusSpec
    route: RouteProfile
    chargers: tuple[Charger, ...] = ()
    tariff: TouRateSchedule
    horizon: Horizon
    scheduler: SchedulerSettings
    sessions: tuple[ChargingSession, ...] = ()
    daily_buckets: tuple[EnergyBucket, ...] = ()
    bess: BessSettings = Field(default_factory=BessSettings)
    dispatch: DispatchSettings = Field(default_factory=DispatchSettings)
    economics: EconomicsSettings = Field(default_factory=EconomicsSettings)

    @model_validator(mode="after")
    def validate_charge_source(self) -> Scenario:
        if self.scheduler.charge_energy_per_interval_kwh is None and self.en_route_charger is None:
            raise ValueError(
                "scheduler.charge_energy_per_interval_kwh is required when no en-route charger is listed"
            )
        return self

    @model_validator(mode="after")
    def validate_session_power(self) -> Scenario:
        ratings = {c.location_label: c.power_kw for c in self.chargers if c.location_label}
        for i, session in enumerate(self.sessions):
            rating = ratings.get(session.location_label)
            if rating is not None and session.power_kw > rating:
                raise ValueError(
                    f"sessions[{i}].power_kw {session.power_kw:g} exceeds the "
                    f"{rating:g} kW charger at {session.location_label!r}"
                )
        return self

    @property
    def en_route_charger(self) -> Charger | None:
        return next((c for c in self.chargers if c.kind == "en-route"), None)

    def with_paper_compat(self) -> Scenario:
        return self.model_copy(update={"paper_compat": PaperCompat.all_on()})


def _format_loc(loc: tuple[int | str, ...]) -> str:
    out = ""
    for part in loc:
        if isinstance(part, int):
            out += f"[{part}]"
        else:
            out += f".{part}" if out else part
    return out or "<root>"


def _format_validation_error(exc: ValidationError, source: str) -> str:
    lines = []
    for err in exc.errors():
        msg = str(err["msg"]).removeprefix("Value error, ")
        lines.append(f"{_format_loc(tuple(err['loc']))}: {msg}")
    return f"{source}: invalid scenario\n  " + "\n  ".join(lines)


def parse_scenario(data: Any, source: str = "<scenario>") -> Scenario:
    """Validate an already-parsed mapping into a Scenario."""
    if not isinstance(data, dict):
        raise ScenarioError(f"{source}: expected a mapping at the top level")
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        raise ScenarioError(_format_validation_error(exc, source)) from exc


def load_scenario(path: Path | str) -> Scenario:
    """Load and validate a scenario YAML file.

    A relative ``dispatch.demand_profile_csv`` is resolved against the
    scenario file's directory.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ScenarioError(f"{path}: not valid UTF-8 ({exc.reason})") from exc

    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark is not None else str(path)
        problem = getattr(exc, "problem", None) or str(exc)
        raise ScenarioError(f"{where}: {problem}") from exc

    if isinstance(data, dict):
        dispatch = data.get("dispatch")
        if isinstance(dispatch, dict) and isinstance(dispatch.get("demand_profile_csv"), str):
            csv_path = Path(dispatch["demand_profile_csv"])
            if not csv_path.is_absolute():
                csv_path = (path.parent / csv_path).resolve()
                data = {**data, "dispatch": {**dispatch, "demand_profile_csv": str(csv_path)}}

    return parse_scenario(data, source=str(path))


def dump_scenario(scenario: Scenario, path: Path | str) -> None:
    """Write a scenario as YAML; loading the file yields an equal Scenario."""
    payload = scenario.model_dump(mode="json")
    Path(path).write_text(
        yaml.safe_dump(payload, sort_keys=False, allow_unicode=True), encoding="utf-8"
    )


def _join_inside(root: Path, name: str) -> Path:
    root = root.resolve()
    if Path(name).is_absolute():
        raise ScenarioError(f"scenario name must be relative: {name}")
    candidate = (root / name).resolve()
    if root not in candidate.parents:
        raise ScenarioError(f"scenario name escapes the scenario directory: {name}")
    return candidate


def resolve_scenario(ref: str, scenario_dir: Path | str | None = None) -> Path:
    """Map a ``--scenario`` argument to a file.

    ``ref`` is either a path to an existing file or the name of a scenario
    in ``scenario_dir`` or the bundled scenario directory (``.yml`` optional).
    """
    as_path = Path(ref)
    if as_path.is_file():
        return as_path

    name = ref if ref.endswith((".yml", ".yaml")) else f"{ref}.yml"
    roots = [Path(scenario_dir)] if scenario_dir else []
    roots.append(BUNDLED_SCENARIO_DIR)
    for root in roots:
        candidate = _join_inside(root, name)
        if candidate.is_file():
            return candidate
    raise ScenarioError(f"unknown scenario: {ref}")


def bundled_scenarios() -> list[str]:
    return sorted(p.stem for p in BUNDLED_SCENARIO_DIR.glob("*.yml"))
