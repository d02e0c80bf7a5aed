"""The five retrieval tools: descriptors, argument checking and JSON payloads.

The CLI and the stdio server both go through :func:`call_tool` and
:func:`render_payload`, so the same arguments give byte-identical output.
"""

from __future__ import annotations

import json
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from typing import Any

from .index import (
    DEFAULT_K,
    ContextIndex,
    SubsystemNotFound,
    find_relevant_context,
    get_files_for_subsystem,
    list_subsystems,
    search_context_documents,
)
from .orchestrator import DEFAULT_SUGGESTIONS, suggest_agent


class ToolError(Exception):
    pass


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    description: str
    input_schema: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "description": self.description, "inputSchema": self.input_schema}


def _schema(properties: dict[str, Any], required: list[str]) -> dict[str, Any]:
    return {"type": "object", "properties": properties, "required": required, "additionalProperties": False}


def _k_schema(default: int) -> dict[str, Any]:
    return {"type": "integer", "minimum": 1, "default": default, "description": "Maximum number of results"}


TOOLS: tuple[ToolDescriptor, ...] = (
    ToolDescriptor(
        "list_subsystems",
        "List every documented subsystem key with its knowledge-doc count.",
        _schema({}, []),
    ),
    ToolDescriptor(
        "get_files_for_subsystem",
        "Return the knowledge-doc paths for a subsystem key. Reports found=false for undocumented subsystems.",
        _schema({"key": {"type": "string", "description": "Subsystem key, lowercase hyphenated"}}, ["key"]),
    ),
    ToolDescriptor(
        "find_relevant_context",
        "Rank subsystems relevant to a task description, with their matching docs.",
        _schema(
            {"task": {"type": "string", "description": "Task description"}, "k": _k_schema(DEFAULT_K)},
            ["task"],
        ),
    ),
    ToolDescriptor(
        "search_context_documents",
        "Keyword search over knowledge documents (substring matching on indexed keywords).",
        _schema(
            {"query": {"type": "string", "description": "Search terms"}, "k": _k_schema(DEFAULT_K)},
            ["query"],
        ),
    ),
    ToolDescriptor(
        "suggest_agent",
        "Suggest specialist agents whose domain matches a task description.",
        _schema(
            {"task": {"type": "string", "description": "Task description"}, "k": _k_schema(DEFAULT_SUGGESTIONS)},
            ["task"],
        ),
    ),
)
TOOL_NAMES = tuple(t.name for t in TOOLS)


def render_payload(payload: Mapping[str, Any]) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=False)


def _string_arg(args: Mapping[str, Any], name: str) -> str:
    value = args.get(name)
    if not isinstance(value, str):
        raise ToolError(f"argument {name!r} must be a string")
    return value


def _k_arg(args: Mapping[str, Any], default: int) -> int:
    value = args.get("k", default)
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ToolError("argument 'k' must be a positive integer")
    return value


def _list_subsystems(index: ContextIndex, args: Mapping[str, Any]) -> dict[str, Any]:
    return {"subsystems": [{"subsystem": key, "doc_count": n} for key, n in list_subsystems(index)]}


def _get_files(index: ContextIndex, args: Mapping[str, Any]) -> dict[str, Any]:
    key = _string_arg(args, "key")
    try:
        files = get_files_for_subsystem(index, key)
    except SubsystemNotFound:
        return {"key": key, "found": False, "files": []}
    return {"key": key, "found": True, "files": files}


def _find(index: ContextIndex, args: Mapping[str, Any]) -> dict[str, Any]:
    task = _string_arg(args, "task")
    groups = find_relevant_context(index, task, _k_arg(args, DEFAULT_K))
    return {"task": task, "found": bool(groups), "subsystems": [g.to_dict() for g in groups]}


def _search(index: ContextIndex, args: Mapping[str, Any]) -> dict[str, Any]:
    query = _string_arg(args, "query")
    hits = search_context_documents(index, query, _k_arg(args, DEFAULT_K))
    return {"query": query, "found": bool(hits), "hits": [h.to_dict() for h in hits]}


def _suggest(index: ContextIndex, args: Mapping[str, Any]) -> dict[str, Any]:
    task = _string_arg(args, "task")
    decisions = suggest_agent(index, task, _k_arg(args, DEFAULT_SUGGESTIONS))
    return {"task": task, "found": bool(decisions), "suggestions": [d.to_dict() for d in decisions]}


_HANDLERS: dict[str, Callable[[ContextIndex, Mapping[str, Any]], dict[str, Any]]] = {
    "list_subsystems": _list_subsystems,
    "get_files_for_subsystem": _get_files,
    "find_relevant_context": _find,
    "search_context_documents": _search,
    "suggest_agent": _suggest,
}


def call_tool(index: ContextIndex, name: str, arguments: Mapping[str, Any] | None = None) -> dict[str, Any]:
    handler = _HANDLERS.get(name)
    if handler is None:
        raise ToolError(f"Unknown tool: {name}")
    args = arguments or {}
    if not isinstance(args, Mapping):
        raise ToolError("tool arguments must be an object")
    allowed = set(next(t for t in TOOLS if t.name == name).input_schema["properties"])
    extra = sorted(set(args) - allowed)
    if extra:
        raise ToolError(f"unexpected argument(s) for {name}: {', '.join(extra)}")
    return handler(index, args)
