"""Immutable keyword index over a parsed corpus and the retrieval queries on it."""

from __future__ import annotations

import json
import os
from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from types import MappingProxyType
from typing import Any

from .corpus import ContextCorpus, KnowledgeDoc, corpus_fingerprint
from .tokens import token_matches, unique_tokens

DEFAULT_K = 5
CACHE_FILENAME = ".ctxforge-index.json"
CACHE_VERSION = 1


class SubsystemNotFound(KeyError):
    """No knowledge doc is indexed under the requested subsystem key."""

    def __init__(self, key: str) -> None:
        super().__init__(key)
        self.key = key

    def __str__(self) -> str:
        return f"no knowledge documents for subsystem {self.key!r}"


def _freeze(mapping: Mapping[str, Any]) -> Mapping[str, Any]:
    return MappingProxyType(dict(sorted(mapping.items())))


@dataclass(frozen=True)
class ContextIndex:
    docs_by_subsystem: Mapping[str, tuple[str, ...]]
    doc_subsystem: Mapping[str, str]
    doc_keywords: Mapping[str, frozenset[str]]
    agent_keywords: Mapping[str, frozenset[str]]
    # keyword -> doc paths carrying it
    postings: Mapping[str, tuple[str, ...]]
    corpus_fingerprint: str
    built_at: datetime = field(compare=False, default_factory=lambda: datetime.now(timezone.utc))

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": CACHE_VERSION,
            "corpus_fingerprint": self.corpus_fingerprint,
            "built_at": self.built_at.isoformat(),
            "docs": [
                {
                    "path": path,
                    "subsystem": self.doc_subsystem[path],
                    "keywords": sorted(self.doc_keywords[path]),
                }
                for path in self.doc_keywords
            ],
            "agents": [
                {"name": name, "keywords": sorted(kws)} for name, kws in self.agent_keywords.items()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ContextIndex:
        if data.get("version") != CACHE_VERSION:
            raise ValueError(f"unsupported index cache version: {data.get('version')!r}")
        return _assemble(
            {d["path"]: (d["subsystem"], frozenset(d["keywords"])) for d in data["docs"]},
            {a["name"]: frozenset(a["keywords"]) for a in data["agents"]},
            data["corpus_fingerprint"],
            datetime.fromisoformat(data["built_at"]),
        )


@dataclass(frozen=True)
class RelevanceHit:
    target: str
    subsystem: str | None
    score: int
    matched_tokens: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "target": self.target,
            "subsystem": self.subsystem,
            "score": self.score,
            "matched_tokens": list(self.matched_tokens),
        }


@dataclass(frozen=True)
class SubsystemHit:
    subsystem: str
    score: int
    hits: tuple[RelevanceHit, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "subsystem": self.subsystem,
            "score": self.score,
            "hits": [h.to_dict() for h in self.hits],
        }


def doc_keyword_set(doc: KnowledgeDoc) -> frozenset[str]:
    kws = set(doc.keywords)
    kws.update(unique_tokens(doc.title))
    for heading in doc.headings:
        kws.update(unique_tokens(heading))
    kws.update(unique_tokens(doc.subsystem))
    return frozenset(kws)


def _assemble(
    docs: Mapping[str, tuple[str, frozenset[str]]],
    agents: Mapping[str, frozenset[str]],
    fingerprint: str,
    built_at: datetime | None = None,
) -> ContextIndex:
    by_subsystem: dict[str, list[str]] = defaultdict(list)
    postings: dict[str, list[str]] = defaultdict(list)
    for path in sorted(docs):
        subsystem, kws = docs[path]
        by_subsystem[subsystem].append(path)
        for kw in kws:
            postings[kw].append(path)
    return ContextIndex(
        docs_by_subsystem=_freeze({k: tuple(v) for k, v in by_subsystem.items()}),
        doc_subsystem=_freeze({p: s for p, (s, _) in docs.items()}),
        doc_keywords=_freeze({p: kws for p, (_, kws) in docs.items()}),
        agent_keywords=_freeze(agents),
        postings=_freeze({k: tuple(v) for k, v in postings.items()}),
        corpus_fingerprint=fingerprint,
        built_at=built_at or datetime.now(timezone.utc),
    )


def build_index(corpus: ContextCorpus) -> ContextIndex:
    return _assemble(
        {d.path: (d.subsystem, doc_keyword_set(d)) for d in corpus.docs},
        {a.name: a.domain_keywords for a in corpus.agents},
        corpus_fingerprint(corpus),
    )


def save_index(index: ContextIndex, path: str | os.PathLike[str]) -> None:
    tmp = Path(f"{path}.tmp")
    tmp.write_text(json.dumps(index.to_dict(), indent=1), encoding="utf-8")
    os.replace(tmp, path)


def load_index(path: str | os.PathLike[str]) -> ContextIndex:
    return ContextIndex.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# -- queries --------------------------------------------------------------


def list_subsystems(index: ContextIndex) -> list[tuple[str, int]]:
    return [(key, len(paths)) for key, paths in sorted(index.docs_by_subsystem.items())]


def get_files_for_subsystem(index: ContextIndex, key: str) -> list[str]:
    """Doc paths for ``key``; raises ``SubsystemNotFound`` for unknown keys.

    Keys are matched exactly, so ``"Save-System"`` does not find ``save-system``.
    """
    try:
        return sorted(index.docs_by_subsystem[key])
    except KeyError:
        raise SubsystemNotFound(key) from None


def _score_docs(index: ContextIndex, text: str) -> dict[str, set[str]]:
    """doc path -> distinct query tokens that hit one of its keywords."""
    matched: dict[str, set[str]] = defaultdict(set)
    vocabulary = index.postings
    for token in unique_tokens(text):
        for keyword, paths in vocabulary.items():
            if token_matches(token, keyword):
                for path in paths:
                    matched[path].add(token)
    return matched


def _doc_hits(index: ContextIndex, text: str) -> list[RelevanceHit]:
    hits = [
        RelevanceHit(path, index.doc_subsystem[path], len(tokens), tuple(sorted(tokens)))
        for path, tokens in _score_docs(index, text).items()
    ]
    hits.sort(key=lambda h: (-h.score, h.target))
    return hits


def search_context_documents(index: ContextIndex, query: str, k: int = DEFAULT_K) -> list[RelevanceHit]:
    """Top ``k`` docs by count of distinct query tokens matching any doc keyword.

    A token matches a keyword when either is a substring of the other. Ties
    break on path. Docs with no matching token are never returned.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    return _doc_hits(index, query)[:k]


def find_relevant_context(index: ContextIndex, task: str, k: int = DEFAULT_K) -> list[SubsystemHit]:
    """Top ``k`` subsystems for a task description.

    Docs are scored as in :func:`search_context_documents`; a subsystem scores
    the max of its docs and carries all of its positive-scoring doc hits.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    grouped: dict[str, list[RelevanceHit]] = defaultdict(list)
    for hit in _doc_hits(index, task):
        grouped[hit.subsystem or ""].append(hit)
    ranked = sorted(
        (SubsystemHit(key, max(h.score for h in hits), tuple(hits)) for key, hits in grouped.items()),
        key=lambda s: (-s.score, s.subsystem),
    )
    return ranked[:k]


def iter_agent_matches(index: ContextIndex, text: str) -> Iterable[tuple[str, list[str]]]:
    tokens = unique_tokens(text)
    for name, keywords in index.agent_keywords.items():
        hits = sorted({t for t in tokens if any(token_matches(t, w) for w in keywords)})
        if hits:
            yield name, hits
