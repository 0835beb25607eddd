"""Command-line interface for the ebess planner.

Commands:
- ebess traction --scenario NAME: Traction forces and trip energy
- ebess schedule --scenario NAME: Optimal charge/drive schedule
- ebess size-bess --scenario NAME: BESS capacity and power for peak shaving
- ebess dispatch --scenario NAME: BESS dispatch time series
- ebess economics --scenario NAME: Billing, warranty lifetime, IRR, ESS size
- ebess report --scenario NAME [--scenario NAME ...]: Everything, to --out

Exit codes: 0 success, 1 invalid input, 2 infeasible schedule, 3 I/O error.
"""

from __future__ import annotations

import asyncio
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import click

from . import __version__
from .bess import summarize_dispatch
from .config import PlannerConfig, load_config
from .economics import irr_solve
from .report import (
    EXIT_INFEASIBLE,
    EXIT_INVALID,
    EXIT_IO,
    batch_exit_code,
    build_load,
    compute_billing,
    compute_lifetime,
    dispatch_frame,
    irr_problem,
    plan_bess,
    prepare_scenario,
    run_batch,
    run_dispatch,
    schedule_frame,
    scheduled_sessions,
    search_ess_size,
    solve_schedule,
    write_csv,
)
from .scenario import ChargingSession, Scenario, load_scenario, resolve_scenario
from .telemetry import TelemetrySink, new_run_id
from .traction import analyze_trip
from .types import ChargeSchedule, NoRoot


@contextmanager
def _exit_on_error(config: PlannerConfig | None = None) -> Iterator[None]:
    """Map planner failures to exit codes."""
    try:
        yield
    except ValueError as e:
        _log_failure(config, e)
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_INVALID)
    except OSError as e:
        _log_failure(config, e)
        click.echo(f"I/O error: {e}", err=True)
        sys.exit(EXIT_IO)


def _log_failure(config: PlannerConfig | None, error: Exception) -> None:
    if config is not None:
        TelemetrySink.from_config(config).log(new_run_id(), "run_failed", {"error": str(error)})


def _load(scenario_ref: str, paper_compat: bool, config: PlannerConfig) -> Scenario:
    path = resolve_scenario(scenario_ref, config.scenario_dir)
    scenario = prepare_scenario(load_scenario(path), paper_compat)
    TelemetrySink.from_config(config).log(
        new_run_id(), "scenario_loaded", {"path": str(path), "name": scenario.name}
    )
    return scenario


def _schedule_sessions(scenario: Scenario) -> list[ChargingSession]:
    """Sessions from the optimal schedule, when the BESS is sized from it."""
    if scenario.bess.sizing_source != "schedule":
        return []
    problem, result = solve_schedule(scenario, analyze_trip(scenario))
    return scheduled_sessions(scenario, problem, result)


scenario_option = click.option(
    "--scenario",
    "-s",
    "scenario_ref",
    required=True,
    help="Scenario file path or bundled scenario name.",
)
paper_compat_option = click.option(
    "--paper-compat",
    is_flag=True,
    help="Use 1600 m/mi, objective coefficient 200 and the rounded economics chain.",
)
safety_factor_option = click.option(
    "--safety-factor",
    type=click.FloatRange(min=1.0),
    default=None,
    help="BESS capacity safety factor (overrides the scenario).",
)
load_option = click.option(
    "--load",
    "load_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Demand-profile CSV (timestamp,power_kw) replacing the scenario load.",
)


@click.group()
@click.version_option(version=__version__, prog_name="ebess")
def cli() -> None:
    """ebess - e-bus charging and stationary storage planning."""
    pass


@cli.command()
@scenario_option
@paper_compat_option
def traction(scenario_ref: str, paper_compat: bool) -> None:
    """Print traction forces and per-trip energy."""
    config = load_config()
    with _exit_on_error(config):
        scenario = _load(scenario_ref, paper_compat, config)
        result = analyze_trip(scenario)

    f, e = result.forces, result.energy
    click.echo(f"Scenario: {scenario.name}")
    click.echo(f"  gradient        {result.gradient_deg:10.4f} deg")
    click.echo(f"  F_1 air drag    {f.air_drag_n:10.1f} N")
    click.echo(f"  F_2 rolling     {f.rolling_n:10.1f} N")
    click.echo(f"  F_3 climb       {f.climb_n:10.1f} N")
    click.echo(f"  F_net           {f.net_n:10.1f} N")
    click.echo(f"  F_total         {f.total_n:10.1f} N")
    click.echo(f"  efficiency      {f.efficiency:10.6f}")
    click.echo(f"  traction energy {e.traction_kwh:10.2f} kWh")
    click.echo(f"  aux energy      {e.aux_kwh:10.2f} kWh")
    click.echo(f"  trip energy     {e.total_kwh:10.2f} kWh over {e.trip_duration_h:.2f} h")
    sys.exit(0)


@cli.command()
@scenario_option
@paper_compat_option
@click.option("--out", "-o", "out_dir", type=click.Path(file_okay=False), default=None)
def schedule(scenario_ref: str, paper_compat: bool, out_dir: str | None) -> None:
    """Solve the charge/drive schedule."""
    config = load_config()
    with _exit_on_error(config):
        scenario = _load(scenario_ref, paper_compat, config)
        problem, result = solve_schedule(scenario, analyze_trip(scenario))
        if out_dir:
            write_csv(schedule_frame(problem, result), Path(out_dir) / "schedule.csv")

    click.echo(f"Scenario: {scenario.name}")
    click.echo(
        f"  {problem.horizon_intervals} intervals, trip {problem.trip_energy_kwh:g} kWh, "
        f"charge {problem.charge_energy_per_interval_kwh:g} kWh/interval, "
        f"{problem.required_trips} legs required"
    )
    if isinstance(result, ChargeSchedule):
        click.echo(f"  decisions: {''.join(str(d) for d in result.decisions)}")
        click.echo(f"  charging intervals: {result.charging_intervals}")
        click.echo(f"  legs driven: {result.trips_completed}")
        click.echo(f"  total cost: ${result.total_cost_usd:.2f}")
        sys.exit(0)

    click.echo("  INFEASIBLE")
    click.echo(f"  reason: {result.reason}")
    click.echo(f"  max achievable legs: {result.max_achievable_trips}")
    click.echo(f"  best-case final battery: {result.best_case_final_battery_kwh:g} kWh")
    sys.exit(EXIT_INFEASIBLE)


@cli.command("size-bess")
@scenario_option
@paper_compat_option
@safety_factor_option
def size_bess_cmd(scenario_ref: str, paper_compat: bool, safety_factor: float | None) -> None:
    """Size the BESS from on-peak charging energy."""
    config = load_config()
    with _exit_on_error(config):
        scenario = _load(scenario_ref, paper_compat, config)
        sessions = _schedule_sessions(scenario)
        plan = plan_bess(scenario, sessions, safety_factor)

    click.echo(f"Scenario: {scenario.name}")
    click.echo(f"  sizing source:   {plan.sizing_source}")
    click.echo(f"  on-peak energy:  {plan.on_peak_energy_kwh:g} kWh")
    click.echo(f"  safety factor:   {plan.safety_factor:g}")
    click.echo(f"  capacity:        {plan.spec.capacity_kwh:g} kWh")
    click.echo(f"  max power:       {plan.spec.max_power_kw:g} kW")
    click.echo(f"  modules:         {plan.batteries_required} x {plan.module_kwh:g} kWh")
    sys.exit(0)


@cli.command("dispatch")
@scenario_option
@paper_compat_option
@safety_factor_option
@load_option
@click.option("--out", "-o", "out_dir", type=click.Path(file_okay=False), default=None)
def dispatch_cmd(
    scenario_ref: str,
    paper_compat: bool,
    safety_factor: float | None,
    load_path: str | None,
    out_dir: str | None,
) -> None:
    """Simulate BESS dispatch over the day's charging load."""
    config = load_config()
    with _exit_on_error(config):
        scenario = _load(scenario_ref, paper_compat, config)
        sessions = _schedule_sessions(scenario)
        plan = plan_bess(scenario, sessions, safety_factor)
        series = run_dispatch(scenario, build_load(scenario, load_path, sessions), plan)
        summary = summarize_dispatch(series, scenario.tariff)
        if out_dir:
            write_csv(dispatch_frame(series), Path(out_dir) / "dispatch.csv")

    click.echo(f"Scenario: {scenario.name}")
    click.echo(f"  samples:             {len(series)} x {series.interval_minutes:g} min")
    click.echo(f"  load energy:         {summary.load_energy_kwh:.2f} kWh")
    click.echo(f"  BESS support:        {summary.support_energy_kwh:.2f} kWh")
    click.echo(f"  BESS recharge:       {summary.recharge_energy_kwh:.2f} kWh")
    click.echo(
        f"  on-peak grid energy: {summary.on_peak_grid_kwh_without_bess:.2f} -> "
        f"{summary.on_peak_grid_kwh_with_bess:.2f} kWh"
    )
    click.echo(f"  daily savings:       ${summary.daily_savings_usd:.2f}")
    sys.exit(0)


@cli.command()
@scenario_option
@paper_compat_option
@safety_factor_option
@load_option
def economics(
    scenario_ref: str, paper_compat: bool, safety_factor: float | None, load_path: str | None
) -> None:
    """Billing, warranty lifetime, IRR and IRR-maximizing ESS size."""
    config = load_config()
    with _exit_on_error(config):
        scenario = _load(scenario_ref, paper_compat, config)
        sessions = _schedule_sessions(scenario)
        plan = plan_bess(scenario, sessions, safety_factor)
        load = build_load(scenario, load_path, sessions)
        summary = summarize_dispatch(run_dispatch(scenario, load, plan), scenario.tariff)
        billing = compute_billing(scenario)
        lifetime = compute_lifetime(scenario, billing, plan.spec)
        irr: float | NoRoot | None = None
        if plan.spec.install_cost_usd > plan.spec.incentives_usd:
            irr = irr_solve(irr_problem(scenario, plan.spec, summary.daily_savings_usd))
        ess = search_ess_size(scenario, load)

    click.echo(f"Scenario: {scenario.name}")
    click.echo(f"  daily bill:            ${billing.daily_bill_usd:.2f}")
    click.echo(f"  monthly bill:          ${billing.monthly_bill_usd:.2f}")
    click.echo(f"  annual discharge:      {lifetime.annual_discharge_kwh:.0f} kWh")
    click.echo(f"  warranty period:       {lifetime.warranty_period_years:.4f} years")
    click.echo(f"  lifetime discharge:    {lifetime.lifetime_discharge_kwh:.0f} kWh")
    click.echo(f"  cost per kWh:          ${lifetime.cost_per_kwh_usd:.4f}")
    click.echo(f"  daily battery cost:    ${lifetime.daily_battery_cost_usd:.2f}")
    click.echo(f"  breakeven install:     ${lifetime.breakeven_install_cost_usd:.2f}")
    if isinstance(irr, NoRoot):
        click.echo(f"  IRR:                   none ({irr.reason})")
    elif irr is not None:
        click.echo(f"  IRR:                   {irr:.4%}")
    if ess is not None:
        click.echo(
            f"  best ESS size:         {ess.energy_kwh:g} kWh / {ess.power_kw:g} kW "
            f"(IRR {ess.irr:.4%}, {len(ess.evaluations)} evaluations)"
        )
    sys.exit(0)


@cli.command()
@click.option(
    "--scenario",
    "-s",
    "scenario_refs",
    multiple=True,
    required=True,
    help="Scenario file path or bundled name; repeat to plan several.",
)
@click.option("--out", "-o", "out_dir", type=click.Path(file_okay=False), default="out", show_default=True)
@paper_compat_option
@safety_factor_option
@load_option
def report(
    scenario_refs: tuple[str, ...],
    out_dir: str,
    paper_compat: bool,
    safety_factor: float | None,
    load_path: str | None,
) -> None:
    """Run the full pipeline and write report.json, schedule.csv, dispatch.csv."""
    config = load_config()
    with _exit_on_error(config):
        paths = [resolve_scenario(ref, config.scenario_dir) for ref in scenario_refs]

    results = asyncio.run(
        run_batch(
            paths,
            Path(out_dir),
            config,
            paper_compat=paper_compat,
            load_path=load_path,
            safety_factor=safety_factor,
        )
    )

    for ref, result in zip(scenario_refs, results, strict=True):
        if result.error is not None:
            click.echo(f"{ref}: {result.error}", err=True)
        elif result.exit_code == EXIT_INFEASIBLE:
            click.echo(f"{ref}: schedule infeasible; report written to {result.out_dir}")
        else:
            click.echo(f"{ref}: report written to {result.out_dir}")

    sys.exit(batch_exit_code(results))


def main() -> None:
    """Entry point for CLI."""
    cli()


if __name__ == "__main__":
    main()
