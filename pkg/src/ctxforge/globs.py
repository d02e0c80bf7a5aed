"""Path glob matching with ``*``, ``?`` and ``**`` over ``/``-separated paths."""

from __future__ import annotations

import re
from collections.abc import Iterable
from functools import lru_cache


@lru_cache(maxsize=1024)
def _segment_regex(segment: str) -> re.Pattern[str]:
    parts = []
    for ch in segment:
        if ch == "*":
            parts.append("[^/]*")
        elif ch == "?":
            parts.append("[^/]")
        else:
            parts.append(re.escape(ch))
    return re.compile("".join(parts))


def match_path(path: str, pattern: str) -> bool:
    """Match a repo-relative ``path`` against an anchored glob ``pattern``.

    ``*`` and ``?`` stay within one path segment; a ``**`` segment matches zero
    or more whole segments. Matching is case-sensitive.
    """
    path_parts = [p for p in path.replace("\\", "/").strip("/").split("/") if p]
    pat_parts = [p for p in pattern.strip("/").split("/") if p]

    @lru_cache(maxsize=None)
    def rec(i: int, j: int) -> bool:
        if j == len(pat_parts):
            return i == len(path_parts)
        pat = pat_parts[j]
        if pat == "**":
            return rec(i, j + 1) or (i < len(path_parts) and rec(i + 1, j))
        if i == len(path_parts):
            return False
        return _segment_regex(pat).fullmatch(path_parts[i]) is not None and rec(i + 1, j + 1)

    return rec(0, 0)


def match_any(path: str, patterns: Iterable[str]) -> bool:
    return any(match_path(path, p) for p in patterns)


def matching_patterns(path: str, patterns: Iterable[str]) -> list[str]:
    return [p for p in patterns if match_path(path, p)]
