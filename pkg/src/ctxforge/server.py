"""MCP-compatible JSON-RPC 2.0 server over newline-delimited stdio.

Handles ``initialize``, ``ping``, ``tools/list`` and ``tools/call``. Requests
are answered strictly in arrival order, one JSON object per output line.
Notifications (no ``id``) never get a response.
"""

from __future__ import annotations

import json
import logging
import sys
from typing import Any, TextIO

from . import __version__
from .index import ContextIndex
from .tools import TOOLS, ToolError, call_tool, render_payload

PROTOCOL_VERSION = "2024-11-05"
SERVER_NAME = "ctxforge"

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
INTERNAL_ERROR = -32603

log = logging.getLogger(__name__)


class RpcError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code
        self.message = message


def _error(msg_id: Any, code: int, message: str) -> dict[str, Any]:
    return {"jsonrpc": "2.0", "id": msg_id, "error": {"code": code, "message": message}}


def _text_result(text: str, is_error: bool) -> dict[str, Any]:
    return {"content": [{"type": "text", "text": text}], "isError": is_error}


class ContextServer:
    def __init__(self, index: ContextIndex) -> None:
        self.index = index

    def initialize(self, params: dict[str, Any]) -> dict[str, Any]:
        return {
            "protocolVersion": PROTOCOL_VERSION,
            "capabilities": {"tools": {"listChanged": False}},
            "serverInfo": {"name": SERVER_NAME, "version": __version__},
        }

    def tools_list(self, params: dict[str, Any]) -> dict[str, Any]:
        return {"tools": [t.to_dict() for t in TOOLS]}

    def tools_call(self, params: dict[str, Any]) -> dict[str, Any]:
        name = params.get("name")
        if not isinstance(name, str):
            raise RpcError(INVALID_PARAMS, "tools/call needs a string 'name'")
        try:
            payload = call_tool(self.index, name, params.get("arguments") or {})
        except ToolError as exc:
            return _text_result(str(exc), True)
        return _text_result(render_payload(payload), False)

    def dispatch(self, method: str, params: dict[str, Any]) -> dict[str, Any]:
        handlers = {
            "initialize": self.initialize,
            "ping": lambda _: {},
            "tools/list": self.tools_list,
            "tools/call": self.tools_call,
        }
        handler = handlers.get(method)
        if handler is None:
            raise RpcError(METHOD_NOT_FOUND, f"Method not found: {method}")
        return handler(params)

    def handle_line(self, line: str) -> dict[str, Any] | None:
        """Response for one input line, or ``None`` for notifications and blank lines."""
        if not line.strip():
            return None
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            return _error(None, PARSE_ERROR, f"Parse error: {exc.msg}")
        if not isinstance(message, dict):
            return _error(None, INVALID_REQUEST, "Invalid Request: expected a JSON object")
        has_id = "id" in message
        msg_id = message.get("id")
        method = message.get("method")
        if message.get("jsonrpc") != "2.0" or not isinstance(method, str):
            return _error(msg_id, INVALID_REQUEST, "Invalid Request") if has_id else None
        params = message.get("params", {})
        if params is None:
            params = {}
        if not isinstance(params, dict):
            return _error(msg_id, INVALID_PARAMS, "params must be an object") if has_id else None
        try:
            result = self.dispatch(method, params)
        except RpcError as exc:
            return _error(msg_id, exc.code, exc.message) if has_id else None
        except Exception:  # pragma: no cover - defensive
            log.exception("internal error handling %s", method)
            return _error(msg_id, INTERNAL_ERROR, "Internal error") if has_id else None
        if not has_id:
            return None
        return {"jsonrpc": "2.0", "id": msg_id, "result": result}

    def serve(self, stdin: TextIO | None = None, stdout: TextIO | None = None) -> None:
        """Process requests until the input stream closes."""
        stdin = stdin or sys.stdin
        stdout = stdout or sys.stdout
        for line in stdin:
            response = self.handle_line(line)
            if response is not None:
                stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
                stdout.flush()


def serve(index: ContextIndex, stdin: TextIO | None = None, stdout: TextIO | None = None) -> None:
    ContextServer(index).serve(stdin, stdout)
