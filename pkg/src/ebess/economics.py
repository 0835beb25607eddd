"""BESS economics: warranty lifetime, break-even cost, IRR and ESS size search."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence

import numpy as np
from scipy.optimize import bisect

from .errors import NoFinanceableConfigurationError
from .scenario import BessSpec
from .types import EssEvaluation, EssSizing, IrrProblem, LifetimeMetrics, NoRoot

DAYS_PER_YEAR = 365
IRR_LOWER = -0.9999
IRR_UPPER = 10.0
# Relative to the net upfront cost.
IRR_RESIDUAL_TOLERANCE = 1e-9


def battery_lifetime_metrics(
    daily_discharge_kwh: float,
    daily_bill_usd: float,
    bess: BessSpec,
    paper_compat_rounding: bool = False,
) -> LifetimeMetrics:
    """Warranty period and cost figures from a day of BESS discharge.

    Half of the warranted throughput counts as discharge. With
    ``paper_compat_rounding`` the warranty is rounded to two decimals and
    the daily bill to whole dollars before they feed the chain.
    """
    if daily_discharge_kwh <= 0:
        raise ValueError(f"daily_discharge_kwh must be > 0, got {daily_discharge_kwh}")

    annual = daily_discharge_kwh * DAYS_PER_YEAR
    warranty = (bess.warranted_throughput_mwh * 1000.0 / 2.0) / annual
    if paper_compat_rounding:
        warranty = round(warranty, 2)
        daily_bill_usd = float(round(daily_bill_usd))
    lifetime = warranty * annual
    cost_per_kwh = bess.install_cost_usd / lifetime

    return LifetimeMetrics(
        daily_discharge_kwh=daily_discharge_kwh,
        annual_discharge_kwh=annual,
        warranty_period_years=warranty,
        lifetime_discharge_kwh=lifetime,
        cost_per_kwh_usd=cost_per_kwh,
        daily_battery_cost_usd=daily_discharge_kwh * cost_per_kwh,
        breakeven_install_cost_usd=(daily_bill_usd / daily_discharge_kwh) * lifetime,
    )


def annual_cashflows(
    daily_savings_usd: float,
    annual_net_income_usd: float,
    horizon_years: int,
    om_cost_usd_per_year: float = 0.0,
) -> tuple[float, ...]:
    """Flat yearly cashflows: a year of daily savings plus net income, less O&M."""
    if horizon_years < 1:
        raise ValueError(f"horizon_years must be >= 1, got {horizon_years}")
    if om_cost_usd_per_year < 0:
        raise ValueError(f"om_cost_usd_per_year must be >= 0, got {om_cost_usd_per_year}")
    yearly = daily_savings_usd * DAYS_PER_YEAR + annual_net_income_usd - om_cost_usd_per_year
    return (yearly,) * horizon_years


def npv(rate: float, problem: IrrProblem) -> float:
    """Discounted cashflows minus net upfront cost."""
    flows = np.asarray(problem.annual_cashflows_usd, dtype=float)
    years = np.arange(1, len(flows) + 1)
    return float(np.sum(flows / (1.0 + rate) ** years) - problem.net_upfront_usd)


def irr_solve(
    problem: IrrProblem, lower: float = IRR_LOWER, upper: float = IRR_UPPER
) -> float | NoRoot:
    """Rate at which the cashflows repay the net upfront cost, by bisection."""
    if problem.net_upfront_usd <= 0:
        raise ValueError("net upfront cost must be > 0")

    f_lo, f_hi = npv(lower, problem), npv(upper, problem)
    if f_lo == 0:
        return lower
    if f_hi == 0:
        return upper
    if math.copysign(1.0, f_lo) == math.copysign(1.0, f_hi):
        return NoRoot(
            reason=f"NPV does not change sign on [{lower}, {upper}]",
            npv_at_lower=f_lo,
            npv_at_upper=f_hi,
        )

    root: float = bisect(npv, lower, upper, args=(problem,), xtol=1e-15, maxiter=400)
    residual = npv(root, problem)
    if not abs(residual) < IRR_RESIDUAL_TOLERANCE * problem.net_upfront_usd:
        return NoRoot(
            reason=f"bisection stopped at {root} with NPV residual {residual:.3g}",
            npv_at_lower=f_lo,
            npv_at_upper=f_hi,
        )
    return root


def simple_payback_years(net_upfront_usd: float, annual_cashflow_usd: float) -> float:
    if annual_cashflow_usd <= 0:
        return math.inf
    return net_upfront_usd / annual_cashflow_usd


def optimize_ess_size(
    energy_levels_kwh: Sequence[float],
    power_ratios: Sequence[float],
    evaluate: Callable[[float, float], IrrProblem],
) -> EssSizing:
    """Six-step IRR-maximizing ESS size search.

    Energy levels are swept upward from the smallest; at each level the
    power/energy ratio is swept downward from the largest. The ratio sweep
    stops once IRR falls below the previous ratio's, and the level sweep
    stops once a level's best IRR falls below the previous level's best.
    This finds the global optimum only on surfaces that rise to a single
    peak along both axes. Configurations without an IRR rank below all
    others.
    """
    if not energy_levels_kwh or not power_ratios:
        raise ValueError("energy levels and power ratios must be non-empty")

    evaluations: list[EssEvaluation] = []
    best: tuple[float, float, float] | None = None
    prev_level_max: float | None = None

    for energy in energy_levels_kwh:
        level_best: tuple[float, float, float] | None = None
        prev_irr: float | None = None
        for ratio in power_ratios:
            power = energy * ratio
            result = irr_solve(evaluate(energy, power))
            irr = result if isinstance(result, float) else None
            evaluations.append(EssEvaluation(energy_kwh=energy, power_kw=power, irr=irr))

            score = irr if irr is not None else -math.inf
            if prev_irr is not None and score < prev_irr:
                break
            prev_irr = score
            if level_best is None or score > level_best[2]:
                level_best = (energy, power, score)

        assert level_best is not None
        if best is None or level_best[2] > best[2]:
            best = level_best
        if prev_level_max is not None and level_best[2] < prev_level_max:
            break
        prev_level_max = level_best[2]

    assert best is not None
    if best[2] == -math.inf:
        raise NoFinanceableConfigurationError("no financeable configuration")
    return EssSizing(
        energy_kwh=best[0], power_kw=best[1], irr=best[2], evaluations=tuple(evaluations)
    )
