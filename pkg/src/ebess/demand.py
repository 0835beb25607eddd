"""Demand-profile ingestion: CSV ``timestamp,power_kw`` -> DemandProfile."""

from __future__ import annotations

from pathlib import Path

import pandas as pd

from .errors import DemandProfileError
from .types import DemandProfile

HEADER = ["timestamp", "power_kw"]


def load_demand_profile(path: Path | str) -> DemandProfile:
    """Load a uniformly spaced power profile.

    Timestamps are ISO-8601. Row numbers in error messages count data rows
    from 1, so the first line after the header is row 1.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as exc:
        raise DemandProfileError(f"{path}: missing header, expected {','.join(HEADER)}") from exc
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DemandProfileError(f"{path}: unreadable CSV ({exc})") from exc

    columns = [str(c).strip() for c in frame.columns]
    if columns != HEADER:
        raise DemandProfileError(
            f"{path}: header must be {','.join(HEADER)}, got {','.join(columns)}"
        )
    frame.columns = pd.Index(HEADER)

    try:
        timestamps = pd.to_datetime(
            frame["timestamp"].str.strip(), format="ISO8601", errors="coerce"
        )
    except ValueError as exc:  # mixed UTC offsets
        raise DemandProfileError(f"{path}: {exc}") from exc
    power = pd.to_numeric(frame["power_kw"].str.strip(), errors="coerce")

    bad_ts = timestamps.isna().to_numpy().nonzero()[0]
    if len(bad_ts):
        row = int(bad_ts[0]) + 1
        raise DemandProfileError(f"row {row}: invalid timestamp {frame['timestamp'].iloc[row - 1]!r}")
    bad_power = power.isna().to_numpy().nonzero()[0]
    if len(bad_power):
        row = int(bad_power[0]) + 1
        raise DemandProfileError(f"row {row}: invalid power_kw {frame['power_kw'].iloc[row - 1]!r}")

    try:
        return DemandProfile(
            timestamps=tuple(ts.to_pydatetime() for ts in timestamps),
            power_kw=tuple(float(p) for p in power),
        )
    except DemandProfileError as exc:
        raise DemandProfileError(f"{path}: {exc}") from exc


def dump_demand_profile(profile: DemandProfile, path: Path | str) -> None:
    """Write a profile in the format :func:`load_demand_profile` reads."""
    frame = pd.DataFrame(
        {
            "timestamp": [ts.isoformat() for ts in profile.timestamps],
            "power_kw": list(profile.power_kw),
        }
    )
    frame.to_csv(path, index=False, lineterminator="\r\n", encoding="utf-8")
