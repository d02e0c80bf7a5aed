"""Route tasks and changed files to specialist agents."""

from __future__ import annotations

from collections.abc import Collection, Iterable, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Any

from .corpus import Phase, TriggerRule
from .globs import match_path
from .index import ContextIndex, iter_agent_matches
from .tokens import tokenize

DEFAULT_SUGGESTIONS = 3


class Reason(str, Enum):
    GLOB_MATCH = "glob_match"
    KEYWORD_MATCH = "keyword_match"
    SUGGESTION = "suggestion"


@dataclass(frozen=True)
class RoutingDecision:
    agent: str
    phase: Phase
    reason: Reason
    evidence: tuple[str, ...]
    score: int = 0

    def __post_init__(self) -> None:
        if not self.evidence:
            raise ValueError("routing decision needs evidence")

    def to_dict(self) -> dict[str, Any]:
        return {
            "agent": self.agent,
            "phase": self.phase.value,
            "reason": self.reason.value,
            "evidence": list(self.evidence),
            "score": self.score,
        }


def parse_phase(value: str | Phase) -> Phase:
    if isinstance(value, Phase):
        return value
    aliases = {"pre": Phase.PRE_CHANGE, "post": Phase.POST_CHANGE}
    key = value.strip().lower().replace("-", "_")
    if key in aliases:
        return aliases[key]
    return Phase(key)


def route(
    rules: Sequence[TriggerRule],
    phase: Phase | str,
    changed_paths: Iterable[str] = (),
    task_text: str | None = None,
    registry: Collection[str] | None = None,
) -> list[RoutingDecision]:
    """Fire trigger rules for ``phase``.

    A rule fires when one of its globs matches a changed path or one of its
    keywords is a token of ``task_text``. Output keeps rule order and the
    first decision per agent. With ``registry`` given, rules naming agents
    outside it are skipped.
    """
    phase = parse_phase(phase)
    paths = sorted(set(changed_paths))
    task_tokens = set(tokenize(task_text or ""))
    decisions: list[RoutingDecision] = []
    seen: set[str] = set()
    for rule in rules:
        if rule.phase is not phase or rule.agent in seen:
            continue
        if registry is not None and rule.agent not in registry:
            continue
        globs = [g for g in rule.file_globs if any(match_path(p, g) for p in paths)]
        keywords = [kw for kw in rule.keywords if kw in task_tokens]
        if not globs and not keywords:
            continue
        reason = Reason.GLOB_MATCH if globs else Reason.KEYWORD_MATCH
        decisions.append(RoutingDecision(rule.agent, phase, reason, tuple(globs + keywords)))
        seen.add(rule.agent)
    return decisions


def suggest_agent(index: ContextIndex, task: str, k: int = DEFAULT_SUGGESTIONS) -> list[RoutingDecision]:
    """Rank agents by distinct task tokens matching their domain keywords."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    ranked = sorted(
        (
            RoutingDecision(name, Phase.PRE_CHANGE, Reason.SUGGESTION, tuple(tokens), len(tokens))
            for name, tokens in iter_agent_matches(index, task)
        ),
        key=lambda d: (-d.score, d.agent),
    )
    return ranked[:k]
