"""Structured telemetry for planning runs, written as JSONL."""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .config import PlannerConfig

DEFAULT_TELEMETRY_PATH = ".ebess/telemetry.jsonl"


@dataclass(frozen=True)
class TelemetrySink:
    """Thin wrapper around JSONL telemetry.

    Event schema:
      {"timestamp": <float>, "run_id": <str>, "type": <str>, "data": <object>}

    Event types:
      - scenario_loaded, traction_computed
      - schedule_solved, schedule_infeasible
      - bess_sized, dispatch_simulated
      - economics_computed, ess_search_completed
      - report_written, run_failed
    """

    enabled: bool
    path: Path

    def log(self, run_id: str, event_type: str, data: dict[str, Any]) -> None:
        if not self.enabled:
            return

        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            entry = {
                "timestamp": time.time(),
                "run_id": run_id,
                "type": event_type,
                "data": data,
            }
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(json.dumps(entry, ensure_ascii=False, default=str) + "\n")
        except OSError:
            # Telemetry must never fail a planning run.
            return

    @classmethod
    def from_config(cls, config: PlannerConfig) -> TelemetrySink:
        return cls(enabled=config.telemetry.enabled, path=Path(config.telemetry.log_path))

    @classmethod
    def disabled(cls) -> TelemetrySink:
        return cls(enabled=False, path=Path(DEFAULT_TELEMETRY_PATH))


def new_run_id() -> str:
    return uuid.uuid4().hex[:12]
