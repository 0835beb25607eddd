"""Planning pipeline: scenario in, report and time series out.

Each stage is a function over the previous stages' results so the CLI can
run a single stage or the whole chain. Stages log to a TelemetrySink; the
computational modules they call do not.
"""

from __future__ import annotations

import asyncio
import tempfile
from collections.abc import Sequence
from dataclasses import asdict, dataclass
from datetime import time
from pathlib import Path
from typing import Annotated, Any

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from .bess import (
    batteries_required,
    dispatch,
    peak_charge_energy,
    sessions_to_profile,
    size_bess,
    summarize_dispatch,
)
from .config import PlannerConfig
from .demand import load_demand_profile
from .economics import (
    annual_cashflows,
    battery_lifetime_metrics,
    irr_solve,
    optimize_ess_size,
    simple_payback_years,
)
from .errors import ScenarioError
from .scenario import BessSpec, ChargingSession, PaperCompat, Scenario, load_scenario
from .scheduler import build_problem, optimize_schedule, schedule_to_sessions
from .tariff import RatedEnergy, bill_day, bill_month
from .telemetry import TelemetrySink, new_run_id
from .traction import analyze_trip
from .types import (
    ChargeSchedule,
    DemandProfile,
    DispatchSeries,
    DispatchSummary,
    EssSizing,
    Infeasible,
    IrrProblem,
    LifetimeMetrics,
    NoRoot,
    SchedulingProblem,
    TractionResult,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INFEASIBLE = 2
EXIT_IO = 3

SCHEDULE_CSV_COLUMNS = ["interval", "decision", "battery_kwh", "distance_mi", "rate_usd_per_kwh"]
DISPATCH_CSV_COLUMNS = [
    "timestamp",
    "load_kw",
    "battery_support_kw",
    "grid_kw",
    "bess_recharge_kw",
    "soc_kwh",
]
OPERATING_WINDOW = (time(8, 0), time(22, 0))
OUTPUT_FILES = ("report.json", "schedule.csv", "dispatch.csv")
STAGING_PREFIX = ".staging-"


class Answer(BaseModel):
    """One answer to an end-user planning question."""

    model_config = ConfigDict(frozen=True)

    label: str
    value: float | int
    unit: str
    source: str
    detail: str = ""


class BillingSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    billing_days: float
    bucket_daily_usd: float | None
    session_daily_usd: float | None
    daily_bill_usd: float
    monthly_bill_usd: float
    daily_energy_kwh: float


class BessPlan(BaseModel):
    model_config = ConfigDict(frozen=True)

    spec: BessSpec
    sizing_source: str
    on_peak_energy_kwh: float
    safety_factor: float
    module_kwh: float
    batteries_required: int
    initial_soc_kwh: float


class PlanningReport(BaseModel):
    """Everything a planning run derived, plus the six end-user answers."""

    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    scenario_name: str
    paper_compat: PaperCompat
    traction: TractionResult
    schedule_trip_energy_kwh: float
    objective_energy_coeff_kwh: float
    schedule: Annotated[ChargeSchedule | Infeasible, Field(discriminator="kind")]
    bess: BessPlan
    dispatch: DispatchSummary
    billing: BillingSummary
    lifetime: LifetimeMetrics
    irr: float | NoRoot | None
    payback_years: float
    ess_sizing: EssSizing | None = None
    answers: list[Answer]

    @property
    def feasible(self) -> bool:
        return isinstance(self.schedule, ChargeSchedule)


@dataclass(frozen=True)
class PlanningRun:
    report: PlanningReport
    problem: SchedulingProblem
    dispatch: DispatchSeries

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.report.feasible else EXIT_INFEASIBLE


def prepare_scenario(scenario: Scenario, paper_compat: bool = False) -> Scenario:
    return scenario.with_paper_compat() if paper_compat else scenario


def solve_schedule(
    scenario: Scenario, traction: TractionResult
) -> tuple[SchedulingProblem, ChargeSchedule | Infeasible]:
    problem = build_problem(scenario, traction.energy.total_kwh)
    return problem, optimize_schedule(problem)


def scheduled_sessions(
    scenario: Scenario, problem: SchedulingProblem, result: ChargeSchedule | Infeasible
) -> list[ChargingSession]:
    """Sessions implied by the optimal schedule at the en-route charger."""
    if not isinstance(result, ChargeSchedule):
        return []
    charger = scenario.en_route_charger
    if charger is not None:
        return schedule_to_sessions(result, problem, charger.power_kw, charger.location_label)
    power = problem.charge_energy_per_interval_kwh / (problem.interval_minutes / 60.0)
    return schedule_to_sessions(result, problem, power) if power > 0 else []


def day_items(scenario: Scenario) -> Sequence[RatedEnergy]:
    """The day's charging energy, preferring explicit buckets over sessions."""
    return scenario.daily_buckets or scenario.sessions


def plan_bess(
    scenario: Scenario,
    schedule_sessions: Sequence[ChargingSession] = (),
    safety_factor: float | None = None,
) -> BessPlan:
    settings = scenario.bess
    factor = settings.safety_factor if safety_factor is None else safety_factor
    day = scenario.horizon.operating_day

    items: Sequence[RatedEnergy]
    if settings.sizing_source == "buckets":
        items = scenario.daily_buckets
    elif settings.sizing_source == "schedule":
        items = schedule_sessions
    else:
        items = scenario.sessions

    sized = size_bess(items, scenario.tariff, day, factor, settings)
    capacity = settings.capacity_kwh if settings.capacity_kwh is not None else sized.capacity_kwh
    power = settings.max_power_kw if settings.max_power_kw is not None else sized.max_power_kw
    spec = settings.to_spec(capacity, power)

    return BessPlan(
        spec=spec,
        sizing_source=settings.sizing_source,
        on_peak_energy_kwh=peak_charge_energy(items, scenario.tariff, day),
        safety_factor=factor,
        module_kwh=settings.module_kwh,
        batteries_required=batteries_required(capacity, settings.module_kwh),
        initial_soc_kwh=capacity * settings.initial_soc_fraction,
    )


def build_load(
    scenario: Scenario,
    load_path: Path | str | None = None,
    schedule_sessions: Sequence[ChargingSession] = (),
) -> DemandProfile:
    """Charging load for dispatch: an explicit CSV, else the day's sessions."""
    path = load_path or scenario.dispatch.demand_profile_csv
    if path is not None:
        return load_demand_profile(path)
    sessions: Sequence[ChargingSession] = scenario.sessions
    if scenario.bess.sizing_source == "schedule":
        sessions = schedule_sessions
    return sessions_to_profile(
        sessions, scenario.horizon.operating_day, scenario.dispatch.interval_minutes
    )


def run_dispatch(scenario: Scenario, load: DemandProfile, plan: BessPlan) -> DispatchSeries:
    return dispatch(
        load,
        plan.spec,
        scenario.tariff,
        initial_soc_kwh=plan.initial_soc_kwh,
        grid_import_limit_kw=scenario.dispatch.grid_import_limit_kw,
    )


def compute_billing(scenario: Scenario) -> BillingSummary:
    day = scenario.horizon.operating_day
    days = scenario.economics.billing_days_per_month
    bucket = bill_day(scenario.daily_buckets, scenario.tariff, day) if scenario.daily_buckets else None
    session = bill_day(scenario.sessions, scenario.tariff, day) if scenario.sessions else None

    daily = bucket if bucket is not None else (session or 0.0)
    if scenario.paper_compat.rounding:
        daily = float(round(daily))
    return BillingSummary(
        billing_days=days,
        bucket_daily_usd=bucket,
        session_daily_usd=session,
        daily_bill_usd=daily,
        monthly_bill_usd=bill_month(daily, days),
        daily_energy_kwh=sum((i.energy_kwh for i in day_items(scenario)), 0.0),
    )


def compute_lifetime(scenario: Scenario, billing: BillingSummary, bess: BessSpec) -> LifetimeMetrics:
    daily_discharge = scenario.economics.daily_discharge_kwh or billing.daily_energy_kwh
    if daily_discharge <= 0:
        raise ScenarioError(
            "economics.daily_discharge_kwh: required when the scenario lists no charging energy"
        )
    return battery_lifetime_metrics(
        daily_discharge,
        billing.daily_bill_usd,
        bess,
        paper_compat_rounding=scenario.paper_compat.rounding,
    )


def irr_problem(scenario: Scenario, bess: BessSpec, daily_savings_usd: float) -> IrrProblem:
    econ = scenario.economics
    return IrrProblem(
        upfront_usd=bess.install_cost_usd,
        incentives_usd=min(bess.incentives_usd, bess.install_cost_usd),
        annual_cashflows_usd=annual_cashflows(
            daily_savings_usd,
            econ.annual_net_income_usd,
            econ.horizon_years,
            om_cost_usd_per_year=econ.om_cost_usd_per_year,
        ),
    )


def search_ess_size(scenario: Scenario, load: DemandProfile) -> EssSizing | None:
    """IRR-maximizing (energy, power) over the scenario's search grid."""
    search = scenario.economics.ess_search
    if search is None:
        return None
    econ, settings = scenario.economics, scenario.bess

    def evaluate(energy_kwh: float, power_kw: float) -> IrrProblem:
        upfront = energy_kwh * econ.install_cost_per_kwh_usd + power_kw * econ.power_cost_per_kw_usd
        spec = settings.model_copy(update={"install_cost_usd": upfront}).to_spec(
            energy_kwh, power_kw
        )
        series = dispatch(
            load,
            spec,
            scenario.tariff,
            initial_soc_kwh=energy_kwh * settings.initial_soc_fraction,
            grid_import_limit_kw=scenario.dispatch.grid_import_limit_kw,
        )
        savings = summarize_dispatch(series, scenario.tariff).daily_savings_usd
        return irr_problem(scenario, spec, savings)

    return optimize_ess_size(search.energy_levels_kwh, search.power_ratios, evaluate)


def energy_between(items: Sequence[RatedEnergy], start: time, end: time) -> float:
    """Energy of items starting in [start, end)."""
    return sum((i.energy_kwh for i in items if start <= i.start_time < end), 0.0)


def build_answers(
    scenario: Scenario,
    plan: BessPlan,
    summary: DispatchSummary,
    billing: BillingSummary,
    lifetime: LifetimeMetrics,
    payback_years: float,
) -> list[Answer]:
    start, end = OPERATING_WINDOW
    days = billing.billing_days
    annual_savings = summary.daily_savings_usd * 365
    lifetime_benefit = annual_savings * lifetime.warranty_period_years - plan.spec.install_cost_usd
    grid_rate = billing.daily_bill_usd / lifetime.daily_discharge_kwh

    return [
        Answer(
            label="energy used 8am-10pm",
            value=energy_between(day_items(scenario), start, end),
            unit="kWh",
            source="scenario charging energy",
        ),
        Answer(
            label="batteries required",
            value=plan.batteries_required,
            unit=f"modules of {plan.module_kwh:g} kWh",
            source="bess sizing",
            detail=f"BESS capacity {plan.spec.capacity_kwh:g} kWh, power {plan.spec.max_power_kw:g} kW",
        ),
        Answer(
            label="monthly savings",
            value=summary.daily_savings_usd * days,
            unit="USD/month",
            source="dispatch",
            detail=f"{summary.daily_savings_usd:.2f} USD/day over {days:g} billing days",
        ),
        Answer(
            label="warranty lifecycle",
            value=lifetime.warranty_period_years,
            unit="years",
            source="lifetime metrics",
            detail=f"lifetime discharge {lifetime.lifetime_discharge_kwh:.0f} kWh",
        ),
        Answer(
            label="ROI breakeven",
            value=lifetime.breakeven_install_cost_usd,
            unit="USD install cost",
            source="lifetime metrics",
            detail=f"simple payback {payback_years:.2f} years at the planned install cost",
        ),
        Answer(
            label="lifetime cost/benefit",
            value=lifetime_benefit,
            unit="USD over warranty",
            source="lifetime metrics and dispatch",
            detail=(
                f"battery energy {lifetime.cost_per_kwh_usd:.4f} USD/kWh "
                f"vs grid {grid_rate:.4f} USD/kWh"
            ),
        ),
    ]


def build_report(
    scenario: Scenario,
    *,
    load_path: Path | str | None = None,
    safety_factor: float | None = None,
    sink: TelemetrySink | None = None,
    run_id: str | None = None,
) -> PlanningRun:
    """Run every stage for one scenario."""
    sink = sink or TelemetrySink.disabled()
    run_id = run_id or new_run_id()

    traction = analyze_trip(scenario)
    sink.log(run_id, "traction_computed", {"scenario": scenario.name, **asdict(traction.energy)})

    problem, result = solve_schedule(scenario, traction)
    if isinstance(result, ChargeSchedule):
        sink.log(
            run_id,
            "schedule_solved",
            {"total_cost_usd": result.total_cost_usd, "charging_intervals": result.charging_intervals},
        )
    else:
        sink.log(run_id, "schedule_infeasible", asdict(result))

    sessions = scheduled_sessions(scenario, problem, result)
    plan = plan_bess(scenario, sessions, safety_factor)
    sink.log(
        run_id,
        "bess_sized",
        {"capacity_kwh": plan.spec.capacity_kwh, "max_power_kw": plan.spec.max_power_kw},
    )

    load = build_load(scenario, load_path, sessions)
    series = run_dispatch(scenario, load, plan)
    summary = summarize_dispatch(series, scenario.tariff)
    sink.log(run_id, "dispatch_simulated", {"samples": len(series), **asdict(summary)})

    billing = compute_billing(scenario)
    lifetime = compute_lifetime(scenario, billing, plan.spec)
    irr: float | NoRoot | None = None
    payback = float("inf")
    if plan.spec.install_cost_usd > plan.spec.incentives_usd:
        problem_irr = irr_problem(scenario, plan.spec, summary.daily_savings_usd)
        irr = irr_solve(problem_irr)
        payback = simple_payback_years(
            problem_irr.net_upfront_usd, problem_irr.annual_cashflows_usd[0]
        )
    sink.log(
        run_id,
        "economics_computed",
        {"monthly_bill_usd": billing.monthly_bill_usd, "irr": irr if isinstance(irr, float) else None},
    )

    ess = search_ess_size(scenario, load)
    if ess is not None:
        sink.log(
            run_id,
            "ess_search_completed",
            {"energy_kwh": ess.energy_kwh, "power_kw": ess.power_kw, "irr": ess.irr},
        )

    report = PlanningReport(
        scenario_name=scenario.name,
        paper_compat=scenario.paper_compat,
        traction=traction,
        schedule_trip_energy_kwh=problem.trip_energy_kwh,
        objective_energy_coeff_kwh=problem.objective_energy_coeff_kwh,
        schedule=result,
        bess=plan,
        dispatch=summary,
        billing=billing,
        lifetime=lifetime,
        irr=irr,
        payback_years=payback,
        ess_sizing=ess,
        answers=build_answers(scenario, plan, summary, billing, lifetime, payback),
    )
    return PlanningRun(report=report, problem=problem, dispatch=series)


def schedule_frame(problem: SchedulingProblem, result: ChargeSchedule | Infeasible) -> pd.DataFrame:
    """One row per interval; decision columns stay empty when infeasible."""
    intervals = list(range(1, problem.horizon_intervals + 1))
    data: dict[str, list[Any]] = {
        "interval": intervals,
        "decision": [None] * len(intervals),
        "battery_kwh": [None] * len(intervals),
        "distance_mi": [None] * len(intervals),
        "rate_usd_per_kwh": list(problem.cost_per_interval),
    }
    if isinstance(result, ChargeSchedule):
        data["decision"] = list(result.decisions)
        data["battery_kwh"] = list(result.battery_kwh[1:])
        data["distance_mi"] = list(result.distance_mi[1:])
    return pd.DataFrame(data, columns=SCHEDULE_CSV_COLUMNS)


def dispatch_frame(series: DispatchSeries) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "timestamp": [ts.isoformat() for ts in series.timestamps],
            "load_kw": series.load_kw,
            "battery_support_kw": series.battery_support_kw,
            "grid_kw": series.grid_kw,
            "bess_recharge_kw": series.bess_recharge_kw,
            "soc_kwh": series.bess_soc_kwh[1:],
        },
        columns=DISPATCH_CSV_COLUMNS,
    )


def write_csv(frame: pd.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\r\n", encoding="utf-8")


def write_outputs(run: PlanningRun, out_dir: Path) -> list[Path]:
    """Write report.json, schedule.csv and dispatch.csv into ``out_dir``.

    The files are staged in a scratch directory inside ``out_dir`` and moved
    into place only once all three are written. If writing fails, ``out_dir``
    keeps whatever it held before and the scratch directory is removed.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(dir=out_dir, prefix=STAGING_PREFIX) as scratch:
        staged = Path(scratch)
        (staged / "report.json").write_text(
            run.report.model_dump_json(indent=2) + "\n", encoding="utf-8"
        )
        write_csv(schedule_frame(run.problem, run.report.schedule), staged / "schedule.csv")
        write_csv(dispatch_frame(run.dispatch), staged / "dispatch.csv")

        return [(staged / name).replace(out_dir / name) for name in OUTPUT_FILES]


@dataclass(frozen=True)
class BatchResult:
    scenario_ref: str
    exit_code: int
    out_dir: Path | None = None
    scenario_name: str | None = None
    error: str | None = None


def run_scenario(
    scenario_path: Path,
    out_dir: Path,
    *,
    paper_compat: bool = False,
    load_path: Path | str | None = None,
    safety_factor: float | None = None,
    sink: TelemetrySink | None = None,
) -> BatchResult:
    """Load, plan and write one scenario; failures become exit codes."""
    sink = sink or TelemetrySink.disabled()
    run_id = new_run_id()
    ref = str(scenario_path)
    try:
        scenario = prepare_scenario(load_scenario(scenario_path), paper_compat)
        sink.log(run_id, "scenario_loaded", {"path": ref, "name": scenario.name})
        run = build_report(
            scenario, load_path=load_path, safety_factor=safety_factor, sink=sink, run_id=run_id
        )
        written = write_outputs(run, out_dir)
        sink.log(run_id, "report_written", {"files": [str(p) for p in written]})
        return BatchResult(ref, run.exit_code, out_dir=out_dir, scenario_name=scenario.name)
    except ValueError as exc:
        sink.log(run_id, "run_failed", {"path": ref, "error": str(exc)})
        return BatchResult(ref, EXIT_INVALID, error=str(exc))
    except OSError as exc:
        sink.log(run_id, "run_failed", {"path": ref, "error": str(exc)})
        return BatchResult(ref, EXIT_IO, error=str(exc))


def batch_out_dirs(scenario_paths: Sequence[Path], out_dir: Path) -> list[Path]:
    """A single scenario writes into ``out_dir``; several get one subdirectory each."""
    if len(scenario_paths) == 1:
        return [out_dir]
    dirs: list[Path] = []
    seen: dict[str, int] = {}
    for path in scenario_paths:
        stem = path.stem
        seen[stem] = seen.get(stem, 0) + 1
        name = stem if seen[stem] == 1 else f"{stem}-{seen[stem]}"
        dirs.append(out_dir / name)
    return dirs


async def run_batch(
    scenario_paths: Sequence[Path],
    out_dir: Path,
    config: PlannerConfig,
    *,
    paper_compat: bool = False,
    load_path: Path | str | None = None,
    safety_factor: float | None = None,
) -> list[BatchResult]:
    """Plan several scenarios concurrently; results keep the input order."""
    sink = TelemetrySink.from_config(config)
    semaphore = asyncio.Semaphore(max(1, int(config.batch.max_parallel)))

    async def _worker(path: Path, target: Path) -> BatchResult:
        async with semaphore:
            return await asyncio.to_thread(
                run_scenario,
                path,
                target,
                paper_compat=paper_compat,
                load_path=load_path,
                safety_factor=safety_factor,
                sink=sink,
            )

    targets = batch_out_dirs(scenario_paths, out_dir)
    results = await asyncio.gather(
        *[_worker(p, t) for p, t in zip(scenario_paths, targets, strict=True)],
        return_exceptions=True,
    )

    outcomes: list[BatchResult] = []
    for path, item in zip(scenario_paths, results, strict=True):
        if isinstance(item, BaseException):
            outcomes.append(BatchResult(str(path), EXIT_INVALID, error=str(item)))
        else:
            outcomes.append(item)
    return outcomes


def batch_exit_code(results: Sequence[BatchResult]) -> int:
    return max((r.exit_code for r in results), default=EXIT_OK)
