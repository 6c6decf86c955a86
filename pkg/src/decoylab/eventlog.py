"""Append-only session event logs and exact replay.

One JSON record per line, one file per session. The opening record pins
everything needed to rebuild the run (scenario spec, seeds, engine config);
command records carry the outcome payload, the virtual/wall gap that was
charged, and the cumulative random-draw count. Replay re-executes the
command script against a fresh engine and insists every recomputed outcome
matches the logged one byte for byte.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional

from .scenario import ScenarioSpec, build_scenario
from .session import CommandOutcome, Session, SessionConfig

KIND_OPEN = "open"
KIND_COMMAND = "command"
KIND_SURVEY = "survey"
KIND_END = "end"
KIND_ERROR = "error"


class GapInLog(ValueError):
    """Sequence numbers are not gapless."""


class DivergenceDetected(ValueError):
    """A replayed outcome does not match what the log recorded."""


class CorruptLog(ValueError):
    """Structurally unusable log (missing open record, bad JSON, ...)."""


@dataclass(frozen=True)
class EventRecord:
    seq: int
    session_id: str
    round_index: int
    kind: str
    command: Optional[str]
    elapsed_s: float
    time_before: float
    time_after: float
    payload: dict
    rng_draws: int
    wall_ts: float

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "session_id": self.session_id,
            "round_index": self.round_index,
            "kind": self.kind,
            "command": self.command,
            "elapsed_s": self.elapsed_s,
            "time_before": self.time_before,
            "time_after": self.time_after,
            "payload": self.payload,
            "rng_draws": self.rng_draws,
            "wall_ts": self.wall_ts,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EventRecord":
        return cls(**{k: d[k] for k in (
            "seq", "session_id", "round_index", "kind", "command",
            "elapsed_s", "time_before", "time_after", "payload",
            "rng_draws", "wall_ts",
        )})


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def record_to_line(record: EventRecord) -> str:
    return canonical_json(record.to_dict())


def line_to_record(line: str) -> EventRecord:
    try:
        return EventRecord.from_dict(json.loads(line))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CorruptLog(f"unreadable event record: {exc}") from exc


def write_log(path, records: Iterable[EventRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(record_to_line(r) + "\n")


def read_log(path) -> List[EventRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(line_to_record(line))
    return records


class EventLogger:
    """Builds the gapless record stream for one session."""

    def __init__(self, session: Session, scenario_spec: ScenarioSpec, session_seed: int, sink=None):
        self.session = session
        self.records: List[EventRecord] = []
        self._sink = sink
        self._next_seq = 0
        self.append(
            kind=KIND_OPEN,
            command=None,
            elapsed_s=0.0,
            time_before=session.time_remaining_s,
            time_after=session.time_remaining_s,
            payload={
                "scenario_spec": scenario_spec.to_dict(),
                "session_seed": session_seed,
                "session_config": session.config.to_dict(),
                "scenario_id": session.scenario.scenario_id,
            },
        )

    def append(self, kind: str, command, elapsed_s: float, time_before: float, time_after: float, payload: dict) -> EventRecord:
        record = EventRecord(
            seq=self._next_seq,
            session_id=self.session.session_id,
            round_index=self.session.scenario.round_index,
            kind=kind,
            command=command,
            elapsed_s=elapsed_s,
            time_before=time_before,
            time_after=time_after,
            payload=payload,
            rng_draws=self.session.rng.draws,
            wall_ts=time.time(),
        )
        self._next_seq += 1
        self.records.append(record)
        if self._sink is not None:
            self._sink.write(record_to_line(record) + "\n")
            self._sink.flush()
        return record

    def log_command(self, line: str, elapsed_s: float, time_before: float, outcome: CommandOutcome) -> EventRecord:
        return self.append(
            kind=KIND_COMMAND,
            command=line,
            elapsed_s=elapsed_s,
            time_before=time_before,
            time_after=self.session.time_remaining_s,
            payload=outcome.to_dict(),
        )

    def log_end(self, reason: str) -> EventRecord:
        return self.append(
            kind=KIND_END,
            command=None,
            elapsed_s=0.0,
            time_before=self.session.time_remaining_s,
            time_after=self.session.time_remaining_s,
            payload={"reason": reason, "final_score": self.session.score},
        )


def run_logged(session: Session, logger: EventLogger, line: str, elapsed_s: float) -> CommandOutcome:
    """Execute one command line and append exactly one command record."""
    time_before = session.time_remaining_s
    outcome = session.execute_line(line, elapsed_s=elapsed_s)
    logger.log_command(line, elapsed_s, time_before, outcome)
    return outcome


def open_meta(records: List[EventRecord]) -> dict:
    if not records or records[0].kind != KIND_OPEN:
        raise CorruptLog("log does not start with an open record")
    return records[0].payload


def replay_log(
    records: List[EventRecord],
    scenario_spec: Optional[ScenarioSpec] = None,
    session_seed: Optional[int] = None,
) -> Session:
    """Rebuild the session from its log, verifying every outcome on the way.

    The scenario spec and session seed default to what the open record pinned.
    Raises GapInLog for broken sequence numbers and DivergenceDetected when a
    recomputed outcome, clock value, or draw count disagrees with the log.
    """
    if not records:
        if scenario_spec is None or session_seed is None:
            raise CorruptLog("empty log needs an explicit scenario spec and seed")
        return Session(build_scenario(scenario_spec), session_seed)

    for i, record in enumerate(records):
        if record.seq != i:
            raise GapInLog(f"expected seq {i}, found {record.seq}")

    meta = open_meta(records)
    if scenario_spec is None:
        scenario_spec = ScenarioSpec.from_dict(meta["scenario_spec"])
    if session_seed is None:
        session_seed = meta["session_seed"]
    config = SessionConfig.from_dict(meta["session_config"])

    session = Session(
        build_scenario(scenario_spec),
        session_seed,
        config=config,
        session_id=records[0].session_id,
    )

    for record in records[1:]:
        if record.kind == KIND_COMMAND:
            outcome = session.execute_line(record.command, elapsed_s=record.elapsed_s)
            if canonical_json(outcome.to_dict()) != canonical_json(record.payload):
                raise DivergenceDetected(f"outcome mismatch at seq {record.seq}")
            if session.time_remaining_s != record.time_after:
                raise DivergenceDetected(f"clock mismatch at seq {record.seq}")
            if session.rng.draws != record.rng_draws:
                raise DivergenceDetected(f"rng draw count mismatch at seq {record.seq}")
        elif record.kind == KIND_END:
            if record.payload.get("final_score") != session.score:
                raise DivergenceDetected(f"final score mismatch at seq {record.seq}")
    return session
