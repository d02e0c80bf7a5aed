"""Detect knowledge docs that went stale relative to their subsystem's source.

A subsystem is stale when a source file matched by one of its docs'
``source_globs`` changed inside the window and none of its docs changed at or
after the earliest such source change.
"""

from __future__ import annotations

import json
import os
import re
import subprocess
from collections.abc import Iterable
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any

from .corpus import ContextCorpus
from .globs import match_any

DEFAULT_WINDOW_DAYS = 14
GIT_PRETTY = "format:%H%x09%cI"
_COMMIT_RE = re.compile(r"^[0-9a-fA-F]{7,64}$")


class VcsError(EnvironmentError):
    """git is missing, or the directory is not a repository."""


class ChangeLogParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, text: str | None = None) -> None:
        where = f"line {line}: " if line is not None else ""
        detail = f" ({text!r})" if text is not None else ""
        super().__init__(f"{where}{message}{detail}")
        self.line = line
        self.text = text


def parse_timestamp(value: str) -> datetime:
    """ISO-8601 to an aware UTC datetime; a trailing ``Z`` and naive values mean UTC."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


@dataclass(frozen=True)
class ChangeEntry:
    commit: str
    timestamp: datetime
    paths: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {"commit": self.commit, "timestamp": format_timestamp(self.timestamp), "paths": list(self.paths)}


@dataclass(frozen=True)
class ChangeLog:
    entries: tuple[ChangeEntry, ...] = ()

    @classmethod
    def of(cls, entries: Iterable[ChangeEntry]) -> ChangeLog:
        # newest first; commit id breaks timestamp ties so ordering is total
        return cls(tuple(sorted(entries, key=lambda e: (e.timestamp, e.commit), reverse=True)))

    def within(self, window_days: int, now: datetime) -> ChangeLog:
        cutoff = now - timedelta(days=window_days)
        return ChangeLog(tuple(e for e in self.entries if e.timestamp >= cutoff))

    def to_dict(self) -> dict[str, Any]:
        return {"entries": [e.to_dict() for e in self.entries]}

    @classmethod
    def from_dict(cls, data: Any) -> ChangeLog:
        if not isinstance(data, dict) or not isinstance(data.get("entries"), list):
            raise ChangeLogParseError("expected an object with an 'entries' list")
        entries = []
        for i, raw in enumerate(data["entries"]):
            try:
                paths = raw["paths"]
                if not isinstance(paths, list) or not all(isinstance(p, str) for p in paths):
                    raise TypeError("paths must be a list of strings")
                entries.append(ChangeEntry(str(raw["commit"]), parse_timestamp(raw["timestamp"]), tuple(paths)))
            except (KeyError, TypeError, ValueError, AttributeError) as exc:
                raise ChangeLogParseError(f"entry {i}: {exc}", text=json.dumps(raw)[:200]) from exc
        return cls.of(entries)


def load_change_log(path: str | os.PathLike[str]) -> ChangeLog:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ChangeLogParseError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
    return ChangeLog.from_dict(data)


def parse_git_log(output: str) -> ChangeLog:
    """Parse ``git log --name-only --pretty=format:%H%x09%cI`` output."""
    entries: list[ChangeEntry] = []
    commit: str | None = None
    stamp: datetime | None = None
    paths: list[str] = []

    def flush() -> None:
        if commit is not None and stamp is not None:
            entries.append(ChangeEntry(commit, stamp, tuple(dict.fromkeys(paths))))

    for lineno, line in enumerate(output.splitlines(), start=1):
        if not line.strip():
            continue
        head, sep, rest = line.partition("\t")
        if sep and _COMMIT_RE.match(head):
            flush()
            try:
                stamp = parse_timestamp(rest)
            except ValueError:
                raise ChangeLogParseError("bad commit timestamp", lineno, line) from None
            commit, paths = head, []
        elif commit is None:
            raise ChangeLogParseError("path before any commit header", lineno, line)
        else:
            paths.append(line.strip())
    flush()
    return ChangeLog.of(entries)


def git_log_command(repo: str | os.PathLike[str], window_days: int) -> list[str]:
    return [
        "git",
        "-C",
        str(repo),
        "-c",
        "core.quotePath=false",
        "log",
        f"--since={window_days}.days",
        "--name-only",
        "--no-color",
        f"--pretty={GIT_PRETTY}",
    ]


def collect_changes(
    repo: str | os.PathLike[str],
    window_days: int = DEFAULT_WINDOW_DAYS,
    now: datetime | None = None,
    log_file: str | os.PathLike[str] | None = None,
) -> ChangeLog:
    """Changes inside the window, from ``git log`` or an exported JSON log."""
    if window_days < 1:
        raise ValueError("window_days must be a positive integer")
    now = now or datetime.now(timezone.utc)
    if log_file is not None:
        return load_change_log(log_file).within(window_days, now)
    try:
        proc = subprocess.run(
            git_log_command(repo, window_days), capture_output=True, text=True, check=False
        )
    except FileNotFoundError as exc:
        raise VcsError("git executable not found on PATH") from exc
    if proc.returncode != 0:
        raise VcsError(f"git log failed in {repo}: {proc.stderr.strip()}")
    return parse_git_log(proc.stdout).within(window_days, now)


@dataclass(frozen=True)
class StaleSubsystem:
    subsystem: str
    doc_paths: tuple[str, ...]
    source_paths: tuple[str, ...]
    last_doc_change: datetime | None
    last_source_change: datetime

    def to_dict(self) -> dict[str, Any]:
        return {
            "subsystem": self.subsystem,
            "doc_paths": list(self.doc_paths),
            "source_paths": list(self.source_paths),
            "last_doc_change": format_timestamp(self.last_doc_change) if self.last_doc_change else None,
            "last_source_change": format_timestamp(self.last_source_change),
        }


@dataclass(frozen=True)
class DriftReport:
    window_days: int
    stale: tuple[StaleSubsystem, ...]
    clean: tuple[str, ...]
    unmapped_paths: tuple[str, ...]

    @property
    def is_stale(self) -> bool:
        return bool(self.stale)

    def to_dict(self) -> dict[str, Any]:
        return {
            "window_days": self.window_days,
            "stale": [s.to_dict() for s in self.stale],
            "clean": list(self.clean),
            "unmapped_paths": list(self.unmapped_paths),
        }


def detect_drift(
    corpus: ContextCorpus,
    log: ChangeLog,
    window_days: int = DEFAULT_WINDOW_DAYS,
    now: datetime | None = None,
) -> DriftReport:
    if window_days < 1:
        raise ValueError("window_days must be a positive integer")
    now = now or datetime.now(timezone.utc)
    entries = log.within(window_days, now).entries
    corpus_paths = corpus.corpus_paths

    docs_by_subsystem: dict[str, list[str]] = {}
    globs_by_subsystem: dict[str, list[str]] = {}
    for doc in corpus.docs:
        docs_by_subsystem.setdefault(doc.subsystem, []).append(doc.path)
        globs_by_subsystem.setdefault(doc.subsystem, []).extend(doc.source_globs)

    unmapped: set[str] = set()
    for entry in entries:
        for path in entry.paths:
            if path in corpus_paths:
                continue
            if not any(match_any(path, globs) for globs in globs_by_subsystem.values()):
                unmapped.add(path)

    stale: list[StaleSubsystem] = []
    clean: list[str] = []
    for subsystem in sorted(docs_by_subsystem):
        doc_paths = set(docs_by_subsystem[subsystem])
        globs = globs_by_subsystem[subsystem]
        source_paths: set[str] = set()
        source_times: list[datetime] = []
        doc_times: list[datetime] = []
        for entry in entries:
            hits = [p for p in entry.paths if p not in corpus_paths and match_any(p, globs)]
            if hits:
                source_paths.update(hits)
                source_times.append(entry.timestamp)
            if doc_paths.intersection(entry.paths):
                doc_times.append(entry.timestamp)
        if source_times:
            first_source = min(source_times)
            if not any(t >= first_source for t in doc_times):
                stale.append(
                    StaleSubsystem(
                        subsystem=subsystem,
                        doc_paths=tuple(sorted(doc_paths)),
                        source_paths=tuple(sorted(source_paths)),
                        last_doc_change=max(doc_times) if doc_times else None,
                        last_source_change=max(source_times),
                    )
                )
                continue
        clean.append(subsystem)

    return DriftReport(window_days, tuple(stale), tuple(clean), tuple(sorted(unmapped)))


def render_warning(report: DriftReport) -> str:
    """Plain-text block for injection into a session; empty when nothing is stale."""
    if not report.stale:
        return ""
    lines = [
        f"CONTEXT DRIFT WARNING: {len(report.stale)} subsystem(s) changed in the last "
        f"{report.window_days} days without a knowledge-doc update."
    ]
    for item in sorted(report.stale, key=lambda s: s.subsystem):
        lines.append(
            f"- {item.subsystem}: review {', '.join(item.doc_paths)} "
            f"(source changed: {', '.join(item.source_paths)})"
        )
    return "\n".join(lines) + "\n"
