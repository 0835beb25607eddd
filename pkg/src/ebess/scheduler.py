"""Charge/drive scheduling for a single bus on a single route.

In each interval the bus either charges (d=1, battery gains the charge
increment) or drives one leg (d=0, battery loses the trip energy and the
odometer gains one leg). A schedule must keep the battery within
[0, capacity] after every interval and complete enough legs to reach the
minimum distance. Among feasible schedules the cheapest wins; ties go to
fewer charging intervals, then to the lexicographically earliest vector.

Because the battery level after t intervals with a charges is always
``initial + a*charge - (t - a)*trip``, the state (t, a) is exact and the
dynamic program needs no battery quantization. All comparisons run on
rationals built from the float inputs, so optimizer and oracle agree
bit-for-bit.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from datetime import timedelta
from fractions import Fraction

from .errors import ScheduleSizeError
from .scenario import PAPER_OBJECTIVE_COEFF_KWH, ChargingSession, Scenario
from .tariff import rate_at
from .types import ChargeSchedule, ConstraintViolation, Infeasible, SchedulingProblem

BRUTE_FORCE_MAX_INTERVALS = 26

# Objective value: (sum of charging-interval rates, number of charges).
_Value = tuple[Fraction, int]


class _Exact:
    """Rational view of a SchedulingProblem."""

    def __init__(self, problem: SchedulingProblem) -> None:
        self.T = problem.horizon_intervals
        self.initial = Fraction(problem.initial_battery_kwh)
        self.capacity = Fraction(problem.battery_capacity_kwh)
        self.charge = Fraction(problem.charge_energy_per_interval_kwh)
        self.trip = Fraction(problem.trip_energy_kwh)
        self.leg = Fraction(problem.leg_distance_mi)
        self.coeff = Fraction(problem.objective_energy_coeff_kwh)
        self.costs = [Fraction(c) for c in problem.cost_per_interval]
        self.required = problem.required_trips

    def battery(self, t: int, charges: int) -> Fraction:
        return self.initial + charges * self.charge - (t - charges) * self.trip

    def in_bounds(self, t: int, charges: int) -> bool:
        return 0 <= self.battery(t, charges) <= self.capacity


def _build_schedule(exact: _Exact, decisions: Sequence[int]) -> ChargeSchedule:
    battery = [float(exact.initial)]
    distance = [0.0]
    charges = 0
    rate_sum = Fraction(0)
    for t, d in enumerate(decisions, start=1):
        charges += d
        if d:
            rate_sum += exact.costs[t - 1]
        battery.append(float(exact.battery(t, charges)))
        distance.append(float((t - charges) * exact.leg))
    return ChargeSchedule(
        decisions=tuple(decisions),
        battery_kwh=tuple(battery),
        distance_mi=tuple(distance),
        total_cost_usd=float(exact.coeff * rate_sum),
        trips_completed=len(decisions) - charges,
    )


def _max_reachable_trips(exact: _Exact) -> int:
    """Most legs driven along any battery-feasible prefix of the horizon."""
    frontier = {0}
    best = 0
    for t in range(1, exact.T + 1):
        nxt = set()
        for a in frontier:
            for a_next in (a, a + 1):
                if exact.in_bounds(t, a_next):
                    nxt.add(a_next)
        if not nxt:
            break
        best = max(best, max(t - a for a in nxt))
        frontier = nxt
    return best


def _certificate(exact: _Exact) -> Infeasible:
    T, R = exact.T, exact.required
    best_case = exact.initial + max(0, T - R) * exact.charge - R * exact.trip
    max_trips = _max_reachable_trips(exact)

    if R > T:
        reason = f"{R} legs required but the horizon has only {T} intervals"
    elif best_case < 0:
        reason = (
            f"driving {R} legs needs {float(R * exact.trip):g} kWh but at most "
            f"{float(exact.initial + (T - R) * exact.charge):g} kWh can be on board "
            f"(best-case final battery {float(best_case):g} kWh)"
        )
    else:
        reason = (
            f"at most {max_trips} of {R} required legs fit while keeping the battery "
            f"within [0, {float(exact.capacity):g}] kWh"
        )

    return Infeasible(
        required_trips=R,
        max_achievable_trips=max_trips,
        best_case_final_battery_kwh=float(best_case),
        min_battery_deficit_kwh=float(max(Fraction(0), -best_case)),
        reason=reason,
    )


def optimize_schedule(problem: SchedulingProblem) -> ChargeSchedule | Infeasible:
    """Exact minimum-cost schedule by backward dynamic programming over (t, charges)."""
    exact = _Exact(problem)
    T = exact.T

    # value[t][a]: best completion from state (t, a); None when no completion exists.
    value: list[list[_Value | None]] = [[None] * (t + 1) for t in range(T + 1)]
    choice: list[list[int]] = [[0] * (t + 1) for t in range(T + 1)]

    for a in range(T + 1):
        if exact.in_bounds(T, a) and T - a >= exact.required:
            value[T][a] = (Fraction(0), 0)

    for t in range(T - 1, -1, -1):
        for a in range(t + 1):
            if not exact.in_bounds(t, a):
                continue
            best: _Value | None = None
            for d in (0, 1):
                nxt = value[t + 1][a + d]
                if nxt is None:
                    continue
                cand = (nxt[0] + exact.costs[t], nxt[1] + 1) if d else nxt
                # Strict improvement only, so d=0 keeps ties.
                if best is None or cand < best:
                    best = cand
                    choice[t][a] = d
            value[t][a] = best

    if value[0][0] is None:
        return _certificate(exact)

    decisions = []
    a = 0
    for t in range(T):
        d = choice[t][a]
        decisions.append(d)
        a += d
    return _build_schedule(exact, decisions)


def brute_force_schedule(problem: SchedulingProblem) -> ChargeSchedule | Infeasible:
    """Exhaustive depth-first enumeration, d=0 before d=1.

    Enumeration order is lexicographic, so keeping only strict improvements
    returns the same tie-broken optimum as :func:`optimize_schedule`.
    Branches are cut when the battery leaves its bounds, when the remaining
    intervals cannot supply the missing legs, or when the partial objective
    already matches the incumbent.
    """
    if problem.horizon_intervals > BRUTE_FORCE_MAX_INTERVALS:
        raise ScheduleSizeError(
            f"brute force limited to {BRUTE_FORCE_MAX_INTERVALS} intervals, "
            f"got {problem.horizon_intervals}"
        )
    exact = _Exact(problem)
    T, R = exact.T, exact.required

    best: _Value | None = None
    best_vector: list[int] | None = None
    prefix: list[int] = []

    def search(t: int, charges: int, rate_sum: Fraction) -> None:
        nonlocal best, best_vector
        if best is not None and (rate_sum, charges) >= best:
            return
        if (t - charges) + (T - t) < R:
            return
        if t == T:
            best = (rate_sum, charges)
            best_vector = list(prefix)
            return
        for d in (0, 1):
            if not exact.in_bounds(t + 1, charges + d):
                continue
            prefix.append(d)
            search(t + 1, charges + d, rate_sum + exact.costs[t] if d else rate_sum)
            prefix.pop()

    search(0, 0, Fraction(0))

    if best_vector is None:
        return _certificate(exact)
    return _build_schedule(exact, best_vector)


def validate_schedule(
    schedule: ChargeSchedule, problem: SchedulingProblem
) -> list[ConstraintViolation]:
    """Check a schedule against the five scheduling constraints.

    1. battery starts at the initial level
    2. 0 <= battery <= capacity after every interval
    3. battery follows the charge/drive recurrence
    4. decisions are binary and distance follows the drive recurrence
    5. final distance reaches the minimum total distance
    """
    T = problem.horizon_intervals
    if len(schedule.decisions) != T:
        raise ValueError(f"schedule has {len(schedule.decisions)} decisions, problem has {T} intervals")
    if len(schedule.battery_kwh) != T + 1 or len(schedule.distance_mi) != T + 1:
        raise ValueError(f"trajectories must have {T + 1} entries")

    scale = max(
        1.0,
        problem.battery_capacity_kwh,
        problem.charge_energy_per_interval_kwh,
        problem.trip_energy_kwh,
    )
    tol = 1e-9 * scale
    dist_tol = 1e-9 * max(1.0, problem.min_total_distance_mi, problem.leg_distance_mi * T)

    violations: list[ConstraintViolation] = []
    battery, distance = schedule.battery_kwh, schedule.distance_mi

    if not math.isclose(battery[0], problem.initial_battery_kwh, abs_tol=tol):
        violations.append(
            ConstraintViolation(
                1, 0, f"initial battery {battery[0]:g} != {problem.initial_battery_kwh:g} kWh"
            )
        )
    if abs(distance[0]) > dist_tol:
        violations.append(ConstraintViolation(4, 0, f"initial distance {distance[0]:g} != 0"))

    for t in range(1, T + 1):
        level = battery[t]
        if level < -tol or level > problem.battery_capacity_kwh + tol:
            violations.append(
                ConstraintViolation(
                    2, t, f"battery {level:g} kWh outside [0, {problem.battery_capacity_kwh:g}]"
                )
            )
        d = schedule.decisions[t - 1]
        if d not in (0, 1):
            violations.append(ConstraintViolation(4, t, f"decision {d} is not binary"))
            continue
        expected = (
            battery[t - 1]
            + d * problem.charge_energy_per_interval_kwh
            - (1 - d) * problem.trip_energy_kwh
        )
        if not math.isclose(level, expected, abs_tol=tol):
            violations.append(
                ConstraintViolation(3, t, f"battery {level:g} kWh, recurrence gives {expected:g}")
            )
        expected_dist = distance[t - 1] + (1 - d) * problem.leg_distance_mi
        if not math.isclose(distance[t], expected_dist, abs_tol=dist_tol):
            violations.append(
                ConstraintViolation(
                    4, t, f"distance {distance[t]:g} mi, recurrence gives {expected_dist:g}"
                )
            )

    if distance[T] < problem.min_total_distance_mi - dist_tol:
        violations.append(
            ConstraintViolation(
                5,
                None,
                f"final distance {distance[T]:g} mi below minimum {problem.min_total_distance_mi:g}",
            )
        )
    return violations


def build_problem(scenario: Scenario, trip_energy_kwh: float) -> SchedulingProblem:
    """Scheduling problem for a scenario's horizon.

    ``trip_energy_kwh`` is the traction-model estimate; an explicit
    ``scheduler.trip_energy_kwh`` in the scenario takes precedence.
    """
    horizon, settings = scenario.horizon, scenario.scheduler

    charge = settings.charge_energy_per_interval_kwh
    if charge is None:
        charger = scenario.en_route_charger
        assert charger is not None  # enforced by Scenario validation
        charge = charger.power_kw * horizon.interval_minutes / 60.0

    if scenario.paper_compat.objective_coeff:
        coeff = PAPER_OBJECTIVE_COEFF_KWH
    elif settings.objective_energy_coeff_kwh is not None:
        coeff = settings.objective_energy_coeff_kwh
    else:
        coeff = charge if charge > 0 else 1.0

    costs = tuple(rate_at(ts, scenario.tariff) for ts in horizon.interval_starts())

    return SchedulingProblem(
        horizon_intervals=horizon.intervals,
        interval_minutes=horizon.interval_minutes,
        initial_battery_kwh=settings.initial_battery_kwh,
        battery_capacity_kwh=settings.battery_capacity_kwh,
        charge_energy_per_interval_kwh=charge,
        trip_energy_kwh=settings.trip_energy_kwh or trip_energy_kwh,
        leg_distance_mi=scenario.route.leg_distance_mi,
        min_total_distance_mi=settings.min_total_distance_mi,
        cost_per_interval=costs,
        objective_energy_coeff_kwh=coeff,
        start=horizon.start_datetime,
    )


def schedule_to_sessions(
    schedule: ChargeSchedule,
    problem: SchedulingProblem,
    power_kw: float,
    location_label: str = "",
) -> list[ChargingSession]:
    """One charging session per charging interval, at ``power_kw``."""
    if problem.start is None:
        raise ValueError("problem has no start time; cannot place sessions on the clock")
    step = timedelta(minutes=problem.interval_minutes)
    return [
        ChargingSession(
            start_time=(problem.start + t * step).time(),
            energy_kwh=problem.charge_energy_per_interval_kwh,
            power_kw=power_kw,
            location_label=location_label,
        )
        for t, d in enumerate(schedule.decisions)
        if d
    ]
