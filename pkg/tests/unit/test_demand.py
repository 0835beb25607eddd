"""Unit tests for demand-profile ingestion."""

from datetime import datetime, timedelta

import pytest

from ebess.demand import dump_demand_profile, load_demand_profile
from ebess.errors import DemandProfileError
from ebess.types import DemandProfile


def write_profile(path, minutes, power=None):
    start = datetime(2024, 7, 17)
    rows = ["timestamp,power_kw"]
    for i, offset in enumerate(minutes):
        value = 10.0 if power is None else power[i]
        rows.append(f"{(start + timedelta(minutes=offset)).isoformat()},{value}")
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path


class TestLoadDemandProfile:
    """Tests for load_demand_profile."""

    def test_half_hour_profile(self, tmp_path):
        """48 rows at 30-minute spacing load as a 48-sample profile."""
        path = write_profile(tmp_path / "load.csv", [30 * i for i in range(48)])
        profile = load_demand_profile(path)
        assert len(profile) == 48
        assert profile.interval_minutes == 30

    def test_non_uniform_spacing(self, tmp_path):
        """Spacing 30, 30, 45 min is reported at row 4."""
        path = write_profile(tmp_path / "load.csv", [0, 30, 60, 105])
        with pytest.raises(DemandProfileError, match="row 4: spacing 45 min differs from 30 min"):
            load_demand_profile(path)

    def test_one_second_tolerance(self, tmp_path):
        """Jitter within one second is accepted."""
        path = tmp_path / "load.csv"
        path.write_text(
            "timestamp,power_kw\n"
            "2024-07-17T00:00:00,1\n"
            "2024-07-17T00:30:00,1\n"
            "2024-07-17T01:00:00.500000,1\n",
            encoding="utf-8",
        )
        assert len(load_demand_profile(path)) == 3

    def test_empty_after_header(self, tmp_path):
        """A header with no rows is too short."""
        path = tmp_path / "load.csv"
        path.write_text("timestamp,power_kw\n", encoding="utf-8")
        with pytest.raises(DemandProfileError, match="at least 2 samples required"):
            load_demand_profile(path)

    def test_non_monotonic(self, tmp_path):
        """Timestamps must strictly increase."""
        path = write_profile(tmp_path / "load.csv", [0, 30, 30])
        with pytest.raises(DemandProfileError, match="row 3: timestamps not strictly increasing"):
            load_demand_profile(path)

    def test_negative_power(self, tmp_path):
        """Negative power is rejected with its row."""
        path = write_profile(tmp_path / "load.csv", [0, 30, 60], power=[1.0, -2.0, 3.0])
        with pytest.raises(DemandProfileError, match="row 2: negative power"):
            load_demand_profile(path)

    def test_wrong_header(self, tmp_path):
        """The header must be exactly timestamp,power_kw."""
        path = tmp_path / "load.csv"
        path.write_text("time,kw\n2024-07-17T00:00:00,1\n", encoding="utf-8")
        with pytest.raises(DemandProfileError, match="header must be timestamp,power_kw"):
            load_demand_profile(path)

    def test_bad_timestamp(self, tmp_path):
        """Unparseable timestamps name their row."""
        path = tmp_path / "load.csv"
        path.write_text(
            "timestamp,power_kw\n2024-07-17T00:00:00,1\nlater,1\n", encoding="utf-8"
        )
        with pytest.raises(DemandProfileError, match="row 2: invalid timestamp"):
            load_demand_profile(path)

    def test_bad_power(self, tmp_path):
        """Non-numeric power names its row."""
        path = tmp_path / "load.csv"
        path.write_text(
            "timestamp,power_kw\n2024-07-17T00:00:00,1\n2024-07-17T00:30:00,lots\n",
            encoding="utf-8",
        )
        with pytest.raises(DemandProfileError, match="row 2: invalid power_kw"):
            load_demand_profile(path)

    def test_dump_then_load(self, tmp_path):
        """A dumped profile loads back with the same samples."""
        start = datetime(2024, 7, 17)
        profile = DemandProfile(
            timestamps=tuple(start + timedelta(minutes=15 * i) for i in range(4)),
            power_kw=(0.0, 12.5, 500.0, 3.25),
        )
        path = tmp_path / "out.csv"
        dump_demand_profile(profile, path)
        assert load_demand_profile(path) == profile


class TestDemandProfileType:
    """Tests for DemandProfile construction."""

    def test_single_sample_rejected(self):
        """One sample has no interval."""
        with pytest.raises(DemandProfileError, match="at least 2 samples required"):
            DemandProfile(timestamps=(datetime(2024, 1, 1),), power_kw=(1.0,))

    def test_length_mismatch(self):
        """Timestamps and power must align."""
        with pytest.raises(DemandProfileError, match="timestamps but"):
            DemandProfile(
                timestamps=(datetime(2024, 1, 1), datetime(2024, 1, 2)), power_kw=(1.0,)
            )
