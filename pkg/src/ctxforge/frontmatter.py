"""Flat ``---``-delimited frontmatter: ``key: value`` pairs and comma/bracket lists.

Nested structures are not supported. Indented lines continue the previous
value, which is how wrapped descriptions and tool lists are written in agent
specs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

DELIMITER = "---"
_KEY_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_-]*)\s*:(.*)$")


class FrontmatterError(ValueError):
    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.message = message
        self.line = line


@dataclass(frozen=True)
class Document:
    meta: dict[str, str]
    body: str
    has_frontmatter: bool
    body_start_line: int  # 1-based line number of the first body line


def split(text: str, required: bool = False) -> Document:
    lines = text.splitlines(keepends=True)
    if not lines or lines[0].rstrip() != DELIMITER:
        if required:
            raise FrontmatterError("missing frontmatter block (expected '---' on the first line)", 1)
        return Document({}, text, False, 1)

    meta: dict[str, str] = {}
    last_key: str | None = None
    for idx in range(1, len(lines)):
        lineno = idx + 1
        raw = lines[idx].rstrip("\r\n")
        if raw.rstrip() == DELIMITER:
            return Document(meta, "".join(lines[idx + 1 :]), True, lineno + 1)
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        if raw[0] in " \t":
            if last_key is None:
                raise FrontmatterError("continuation line without a preceding key", lineno)
            meta[last_key] = f"{meta[last_key]} {raw.strip()}".strip()
            continue
        m = _KEY_RE.match(raw)
        if m is None:
            raise FrontmatterError(f"expected 'key: value', got {raw!r}", lineno)
        last_key = m.group(1)
        meta[last_key] = m.group(2).strip()
    raise FrontmatterError("frontmatter block is not closed with '---'", 1)


def unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def parse_list(value: str) -> list[str]:
    value = value.strip()
    if value.startswith("[") and value.endswith("]"):
        value = value[1:-1]
    items = (unquote(item) for item in value.split(","))
    return [item for item in items if item]


def _format_value(value: str | list[str]) -> str:
    if isinstance(value, str):
        return value
    return ", ".join(value)


def dump(meta: dict[str, str | list[str]], body: str) -> str:
    lines = [DELIMITER]
    lines.extend(f"{key}: {_format_value(value)}" for key, value in meta.items())
    lines.append(DELIMITER)
    return "\n".join(lines) + "\n" + body
