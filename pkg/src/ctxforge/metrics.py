"""Interaction metrics from JSONL session logs.

Each line is one record::

    {"session_id": "s1", "timestamp": "2025-01-01T00:00:00Z",
     "kind": "human_prompt", "text": "...", "agent": null}

``kind`` is one of ``human_prompt``, ``agent_invocation`` or ``agent_turn``.
Logs from other tools can be mapped onto this shape with an adapter, a
callable taking the decoded JSON object and returning a record dict (or
``None`` to skip the line).
"""

from __future__ import annotations

import json
import os
from collections import Counter
from collections.abc import Callable, Collection, Iterable, Mapping
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any

from .drift import parse_timestamp

SHORT_PROMPT_WORDS = 100

Adapter = Callable[[Mapping[str, Any]], "Mapping[str, Any] | None"]


class RecordKind(str, Enum):
    HUMAN_PROMPT = "human_prompt"
    AGENT_INVOCATION = "agent_invocation"
    AGENT_TURN = "agent_turn"


@dataclass(frozen=True)
class InteractionRecord:
    session_id: str
    timestamp: datetime
    kind: RecordKind
    text: str | None = None
    agent: str | None = None

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> InteractionRecord:
        """Validate one decoded line; raises ``ValueError`` on a bad shape."""
        session_id = data.get("session_id")
        if not isinstance(session_id, str) or not session_id:
            raise ValueError("session_id must be a non-empty string")
        stamp = data.get("timestamp")
        if not isinstance(stamp, str):
            raise ValueError("timestamp must be an ISO-8601 string")
        kind = RecordKind(data.get("kind"))
        text = data.get("text")
        agent = data.get("agent")
        if kind is RecordKind.HUMAN_PROMPT and not isinstance(text, str):
            raise ValueError("human_prompt needs a text string")
        if kind is RecordKind.AGENT_INVOCATION and (not isinstance(agent, str) or not agent):
            raise ValueError("agent_invocation needs an agent name")
        return cls(
            session_id=session_id,
            timestamp=parse_timestamp(stamp),
            kind=kind,
            text=text if isinstance(text, str) else None,
            agent=agent if isinstance(agent, str) and agent else None,
        )


@dataclass
class IngestResult:
    records: list[InteractionRecord] = field(default_factory=list)
    skipped: int = 0
    errors: list[str] = field(default_factory=list)


def rename_fields(mapping: Mapping[str, str], kinds: Mapping[str, str] | None = None) -> Adapter:
    """Adapter that renames foreign keys (and optionally kind values) to the record shape."""

    def adapt(obj: Mapping[str, Any]) -> dict[str, Any]:
        out = {mapping.get(k, k): v for k, v in obj.items()}
        if kinds is not None and out.get("kind") in kinds:
            out["kind"] = kinds[out["kind"]]
        return out

    return adapt


def _ingest_lines(lines: Iterable[str], result: IngestResult, adapter: Adapter | None) -> None:
    for line in lines:
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("not a JSON object")
            if adapter is not None:
                obj = adapter(obj)
                if obj is None:
                    result.skipped += 1
                    continue
            result.records.append(InteractionRecord.from_dict(obj))
        except ValueError:
            result.skipped += 1


def ingest_logs(paths: Iterable[str | os.PathLike[str]], adapter: Adapter | None = None) -> IngestResult:
    """Read JSONL files; bad lines are counted as skipped, unreadable files collected as errors."""
    result = IngestResult()
    for path in paths:
        try:
            with open(path, encoding="utf-8") as fh:
                _ingest_lines(fh, result, adapter)
        except (OSError, UnicodeDecodeError) as exc:
            result.errors.append(f"{path}: {exc}")
    return result


def find_log_files(directory: str | os.PathLike[str]) -> list[Path]:
    base = Path(directory)
    if base.is_file():
        return [base]
    return sorted(p for p in base.rglob("*.jsonl") if p.is_file())


def word_count(text: str) -> int:
    return len(text.split())


@dataclass(frozen=True)
class SessionStats:
    sessions: int
    human_prompts: int
    agent_invocations: int
    agent_turns: int
    total: int
    prompts_per_session: Fraction | None
    short_prompt_fraction: Fraction | None
    specialist_invocations: int
    builtin_invocations: int
    unclassifiable_invocations: int
    top_agents: tuple[tuple[str, int], ...]
    skipped_records: int = 0

    def to_dict(self) -> dict[str, Any]:
        def num(value: Fraction | None) -> float | None:
            return None if value is None else float(value)

        return {
            "sessions": self.sessions,
            "human_prompts": self.human_prompts,
            "agent_invocations": self.agent_invocations,
            "agent_turns": self.agent_turns,
            "total": self.total,
            "prompts_per_session": num(self.prompts_per_session),
            "short_prompt_fraction": num(self.short_prompt_fraction),
            "specialist_invocations": self.specialist_invocations,
            "builtin_invocations": self.builtin_invocations,
            "unclassifiable_invocations": self.unclassifiable_invocations,
            "top_agents": [{"agent": a, "count": n} for a, n in self.top_agents],
            "skipped_records": self.skipped_records,
        }


def compute_stats(
    records: Iterable[InteractionRecord],
    registry: Iterable[Any] = (),
    builtin: Collection[str] = (),
    skipped: int = 0,
) -> SessionStats:
    """Fold records into :class:`SessionStats`.

    ``total`` is prompts plus turns; invocations are a tally of agent calls
    made within those turns. ``registry`` holds agent specs or bare names; an
    invocation whose agent is in it counts as specialist, one in ``builtin``
    as builtin, anything else as unclassifiable. Rates over an empty
    denominator are ``None``.
    """
    specialists = {getattr(a, "name", a) for a in registry}
    builtins = set(builtin)
    sessions: set[str] = set()
    kinds: Counter[RecordKind] = Counter()
    agents: Counter[str] = Counter()
    short = 0
    specialist = builtin_count = 0

    for rec in records:
        sessions.add(rec.session_id)
        kinds[rec.kind] += 1
        if rec.kind is RecordKind.HUMAN_PROMPT:
            if word_count(rec.text or "") <= SHORT_PROMPT_WORDS:
                short += 1
        elif rec.kind is RecordKind.AGENT_INVOCATION and rec.agent:
            agents[rec.agent] += 1
            if rec.agent in specialists:
                specialist += 1
            elif rec.agent in builtins:
                builtin_count += 1

    prompts = kinds[RecordKind.HUMAN_PROMPT]
    invocations = kinds[RecordKind.AGENT_INVOCATION]
    turns = kinds[RecordKind.AGENT_TURN]
    return SessionStats(
        sessions=len(sessions),
        human_prompts=prompts,
        agent_invocations=invocations,
        agent_turns=turns,
        # invocations happen inside agent turns, so they are not added again
        total=prompts + turns,
        prompts_per_session=Fraction(prompts, len(sessions)) if sessions else None,
        short_prompt_fraction=Fraction(short, prompts) if prompts else None,
        specialist_invocations=specialist,
        builtin_invocations=builtin_count,
        unclassifiable_invocations=invocations - specialist - builtin_count,
        top_agents=tuple(sorted(agents.items(), key=lambda kv: (-kv[1], kv[0]))),
        skipped_records=skipped,
    )
