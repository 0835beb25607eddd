"""Traction model: resistance forces, drivetrain efficiency and trip energy.

A leg is driven at constant average speed, so the only forces are
aerodynamic drag, rolling resistance and the climb component of gravity.
Braking and regeneration are not modeled; a downhill leg whose net force
is negative draws no traction energy.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

from .scenario import METERS_PER_MILE, BusSpec, RouteProfile, Scenario
from .types import TractionForces, TractionResult, TripEnergy

MPH_TO_M_PER_S = 0.44704
JOULES_PER_KWH = 3.6e6


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value}")


def gradient_angle(
    elev_start_m: float,
    elev_end_m: float,
    distance_mi: float,
    meters_per_mile: float = METERS_PER_MILE,
) -> float:
    """Road gradient in degrees, positive when the start stop sits higher than the end.

    Reversing the direction of travel negates the angle.
    """
    _require_finite(elev_start_m=elev_start_m, elev_end_m=elev_end_m, distance_mi=distance_mi)
    if distance_mi <= 0:
        raise ValueError(f"distance_mi must be > 0, got {distance_mi}")
    rise = elev_start_m - elev_end_m
    return math.degrees(math.atan(rise / (distance_mi * meters_per_mile)))


def drivetrain_efficiency(stage_efficiencies: Sequence[float]) -> float:
    """Net efficiency of motor, transmission and battery stages in series."""
    if not stage_efficiencies:
        raise ValueError("at least one drivetrain stage is required")
    for stage in stage_efficiencies:
        if not 0 < stage <= 1:
            raise ValueError(f"stage efficiency {stage} outside (0, 1]")
    return math.prod(stage_efficiencies)


def traction_forces(
    bus: BusSpec, route: RouteProfile, angle_deg: float, efficiency: float
) -> TractionForces:
    _require_finite(
        angle_deg=angle_deg,
        efficiency=efficiency,
        mass_kg=bus.mass_kg,
        frontal_area_m2=bus.frontal_area_m2,
        drag_coefficient=bus.drag_coefficient,
        average_speed_mph=route.average_speed_mph,
        air_density_kg_m3=route.air_density_kg_m3,
        rolling_coefficient=route.rolling_coefficient,
        gravity_m_s2=route.gravity_m_s2,
    )
    if not 0 < efficiency <= 1:
        raise ValueError(f"efficiency must lie in (0, 1], got {efficiency}")

    v = route.average_speed_mph * MPH_TO_M_PER_S
    a = math.radians(angle_deg)
    weight = bus.mass_kg * route.gravity_m_s2

    air_drag = 0.5 * bus.frontal_area_m2 * bus.drag_coefficient * route.air_density_kg_m3 * v**2
    rolling = weight * route.rolling_coefficient * math.cos(a)
    climb = weight * math.sin(a)
    net = air_drag + rolling + climb

    return TractionForces(
        air_drag_n=air_drag,
        rolling_n=rolling,
        climb_n=climb,
        net_n=net,
        total_n=net / efficiency,
        efficiency=efficiency,
    )


def trip_energy(
    forces: TractionForces,
    route: RouteProfile,
    aux_power_kw: float,
    meters_per_mile: float = METERS_PER_MILE,
) -> TripEnergy:
    """Battery energy for one leg: traction work plus auxiliary load."""
    _require_finite(aux_power_kw=aux_power_kw, leg_distance_mi=route.leg_distance_mi)
    if aux_power_kw < 0:
        raise ValueError(f"aux_power_kw must be >= 0, got {aux_power_kw}")

    distance_m = route.leg_distance_mi * meters_per_mile
    duration_h = route.leg_distance_mi / route.average_speed_mph
    traction_kwh = max(forces.total_n, 0.0) * distance_m / JOULES_PER_KWH
    aux_kwh = aux_power_kw * duration_h

    return TripEnergy(
        traction_kwh=traction_kwh,
        aux_kwh=aux_kwh,
        total_kwh=traction_kwh + aux_kwh,
        trip_duration_h=duration_h,
    )


def analyze_trip(scenario: Scenario) -> TractionResult:
    """Run the traction model for the scenario's bus and route."""
    route = scenario.route
    mpm = scenario.paper_compat.meters_per_mile

    if route.gradient_deg is not None:
        angle = route.gradient_deg
    else:
        angle = gradient_angle(
            route.elevation_start_m, route.elevation_end_m, route.leg_distance_mi, mpm
        )

    efficiency = drivetrain_efficiency(scenario.bus.drivetrain_stages)
    forces = traction_forces(scenario.bus, route, angle, efficiency)
    energy = trip_energy(forces, route, scenario.bus.aux_power_kw, mpm)

    return TractionResult(
        gradient_deg=angle,
        meters_per_mile=mpm,
        efficiency=efficiency,
        forces=forces,
        energy=energy,
    )
