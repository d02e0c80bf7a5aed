"""Tokenizer and the keyword matching rule shared by retrieval and routing."""

from __future__ import annotations

import re
from collections.abc import Iterable

STOPWORDS = frozenset(
    {"the", "and", "for", "with", "how", "what", "when", "this", "that", "are", "you", "not", "all", "its"}
)
MIN_TOKEN_LENGTH = 3

_SPLIT_RE = re.compile(r"[^a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split it on every non-alphanumeric character.

    Tokens shorter than three characters and stopwords are dropped. Order of
    first occurrence is kept and duplicates are retained; callers dedupe.
    """
    return [
        tok
        for tok in _SPLIT_RE.split(text.lower())
        if len(tok) >= MIN_TOKEN_LENGTH and tok not in STOPWORDS
    ]


def unique_tokens(text: str) -> list[str]:
    return list(dict.fromkeys(tokenize(text)))


def token_matches(token: str, keyword: str) -> bool:
    # bidirectional: "sync" hits "synchronization", "networking" hits "network"
    return token in keyword or keyword in token


def matched_tokens(tokens: Iterable[str], keywords: Iterable[str]) -> list[str]:
    """Sorted distinct ``tokens`` that match at least one of ``keywords``."""
    kws = list(keywords)
    return sorted({t for t in tokens if any(token_matches(t, w) for w in kws)})
