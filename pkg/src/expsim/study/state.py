"""Event-sourced study state.

Every mutation is a record appended to the durable log; in-memory state is a
pure fold over those records, so replaying the log after a crash rebuilds
exactly the same sessions, phases, and response sets.
"""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

from ..core import RngStream
from .config import StudyConfig

__all__ = ["Phase", "Session", "StudyState", "PhaseError", "now_ms"]


def now_ms() -> int:
    return int(time.time() * 1000)


class Phase(enum.Enum):
    CONSENT = "consent"
    INSTRUCTIONS = "instructions"
    COMPREHENSION = "comprehension"
    TRAINING = "training"
    TEST = "test"
    EXIT_SURVEY = "exit_survey"
    DONE = "done"

    def __str__(self) -> str:
        return self.value


PHASE_ORDER = list(Phase)


class PhaseError(RuntimeError):
    """An operation was attempted in the wrong phase or out of order."""


@dataclass
class Session:
    session_id: str
    kind: str
    test_order: list
    created_ms: int
    phase: Phase = Phase.CONSENT
    training_cursor: int = 0
    test_cursor: int = 0
    responses: dict = field(default_factory=dict)   # item_id -> record
    comprehension_attempts: int = 0
    screened_out: bool = False
    test_started_ms: int | None = None
    survey: dict | None = None

    @property
    def completed(self) -> bool:
        return self.phase is Phase.DONE

    @property
    def counts_toward_cohort(self) -> bool:
        return not self.screened_out


class StudyState:
    """Pure state container; all changes flow through apply()."""

    def __init__(self, config: StudyConfig):
        self.config = config
        self.sessions: dict[str, Session] = {}

    # ---- record application (used live and during replay) ----

    def apply(self, record: dict) -> None:
        kind = record["type"]
        handler = getattr(self, f"_apply_{kind}", None)
        if handler is None:
            raise ValueError(f"unknown record type {kind!r}")
        handler(record)

    def _apply_session_created(self, r: dict) -> None:
        s = Session(session_id=r["session_id"], kind=r["kind"],
                    test_order=list(r["test_order"]), created_ms=r["ts"])
        self.sessions[s.session_id] = s

    def _apply_phase_advanced(self, r: dict) -> None:
        s = self.sessions[r["session_id"]]
        new_phase = Phase(r["phase"])
        if PHASE_ORDER.index(new_phase) < PHASE_ORDER.index(s.phase):
            raise PhaseError("phases only move forward")
        s.phase = new_phase
        if new_phase is Phase.TEST and s.test_started_ms is None:
            s.test_started_ms = r["ts"]

    def _apply_comprehension_submitted(self, r: dict) -> None:
        s = self.sessions[r["session_id"]]
        s.comprehension_attempts += 1

    def _apply_session_screened(self, r: dict) -> None:
        self.sessions[r["session_id"]].screened_out = True

    def _apply_response_recorded(self, r: dict) -> None:
        s = self.sessions[r["session_id"]]
        s.responses[r["item_id"]] = r
        if r["phase"] == Phase.TRAINING.value:
            s.training_cursor += 1
        elif r["phase"] == Phase.TEST.value:
            s.test_cursor += 1

    def _apply_survey_recorded(self, r: dict) -> None:
        self.sessions[r["session_id"]].survey = r.get("payload", {})

    # ---- queries ----

    def kind_load(self) -> dict:
        """Sessions counting toward the cohort, per explanation kind."""
        counts = {k: 0 for k in self.config.kinds}
        for s in self.sessions.values():
            if s.counts_toward_cohort and s.kind in counts:
                counts[s.kind] += 1
        return counts

    def cohort_full(self) -> bool:
        return sum(self.kind_load().values()) >= self.config.cohort_size

    def pick_kind(self, rng: RngStream) -> str:
        """Balanced assignment: the kind with the fewest counted sessions,
        ties broken uniformly at random."""
        load = self.kind_load()
        lowest = min(load.values())
        candidates = [k for k in self.config.kinds if load[k] == lowest]
        if len(candidates) == 1:
            return candidates[0]
        pick = int(rng.generator.integers(0, len(candidates)))
        return candidates[pick]
