"""Exception types raised by the planner.

All are ``ValueError`` subclasses so callers that only care about "bad
input" can catch one type. Solver outcomes that are not errors
(an infeasible schedule, an IRR with no root) are returned as values.
"""

from __future__ import annotations


class ScenarioError(ValueError):
    """Scenario file could not be parsed or violates a schema rule."""


class DemandProfileError(ValueError):
    """Demand-profile CSV is malformed (header, ordering, spacing, values)."""


class ScheduleSizeError(ValueError):
    """Horizon too long for exhaustive enumeration."""


class NoFinanceableConfigurationError(ValueError):
    """Every ESS size evaluated had no IRR root."""
