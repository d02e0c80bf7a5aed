from __future__ import annotations

import io
import json

import pytest

from conftest import FIXTURES
from ctxforge.corpus import parse_corpus
from ctxforge.index import build_index
from ctxforge.server import PROTOCOL_VERSION, ContextServer
from ctxforge.tools import TOOL_NAMES, ToolError, call_tool, render_payload


@pytest.fixture(scope="module")
def server():
    return ContextServer(build_index(parse_corpus(FIXTURES / "game")))


def req(method, params=None, msg_id=1):
    msg = {"jsonrpc": "2.0", "id": msg_id, "method": method}
    if params is not None:
        msg["params"] = params
    return json.dumps(msg)


def test_initialize(server):
    resp = server.handle_line(req("initialize", {"protocolVersion": "2099-01-01", "capabilities": {}}))
    assert resp["id"] == 1
    assert resp["result"]["protocolVersion"] == PROTOCOL_VERSION
    assert resp["result"]["serverInfo"]["name"] == "ctxforge"
    assert "tools" in resp["result"]["capabilities"]


def test_tools_list(server):
    tools = server.handle_line(req("tools/list"))["result"]["tools"]
    assert [t["name"] for t in tools] == list(TOOL_NAMES)
    assert set(TOOL_NAMES) == {
        "list_subsystems", "get_files_for_subsystem", "find_relevant_context",
        "search_context_documents", "suggest_agent",
    }
    for t in tools:
        assert t["inputSchema"]["type"] == "object" and t["description"]


def test_tool_call_text_is_payload_json(server):
    resp = server.handle_line(req("tools/call", {"name": "search_context_documents", "arguments": {"query": "rng"}}))
    result = resp["result"]
    assert result["isError"] is False
    text = result["content"][0]["text"]
    assert text == render_payload(call_tool(server.index, "search_context_documents", {"query": "rng"}))
    assert json.loads(text)["hits"][0]["target"] == "context/combat-rng.md"


def test_missing_subsystem_payload(server):
    for name, args, key in [
        ("find_relevant_context", {"task": "drop system"}, "subsystems"),
        ("get_files_for_subsystem", {"key": "drop-system"}, "files"),
    ]:
        result = server.handle_line(req("tools/call", {"name": name, "arguments": args}))["result"]
        payload = json.loads(result["content"][0]["text"])
        assert result["isError"] is False and payload["found"] is False and payload[key] == []


def test_unknown_tool_is_error_result(server):
    resp = server.handle_line(req("tools/call", {"name": "nope", "arguments": {}}, msg_id=9))
    assert resp["id"] == 9 and "error" not in resp
    assert resp["result"]["isError"] is True


def test_bad_arguments_are_error_results(server):
    for args in [{}, {"query": 3}, {"query": "x", "k": 0}, {"query": "x", "bogus": 1}]:
        result = server.handle_line(req("tools/call", {"name": "search_context_documents", "arguments": args}))["result"]
        assert result["isError"] is True
    with pytest.raises(ToolError):
        call_tool(server.index, "suggest_agent", {"task": "x", "k": True})


def test_protocol_errors(server):
    parse = server.handle_line("{oops")
    assert parse["id"] is None and parse["error"]["code"] == -32700
    assert server.handle_line("[1]")["error"]["code"] == -32600
    assert server.handle_line(json.dumps({"id": 4, "method": "ping"}))["error"]["code"] == -32600
    assert server.handle_line(req("does/not/exist", msg_id="abc"))["error"] == {"code": -32601, "message": "Method not found: does/not/exist"}
    assert server.handle_line(req("tools/call", {"arguments": {}}))["error"]["code"] == -32602
    assert server.handle_line(req("ping", [1]))["error"]["code"] == -32602


def test_notifications_and_blank_lines_are_silent(server):
    assert server.handle_line(json.dumps({"jsonrpc": "2.0", "method": "notifications/initialized"})) is None
    assert server.handle_line(json.dumps({"jsonrpc": "2.0", "method": "nope"})) is None
    assert server.handle_line("   \n") is None


def test_serve_stream_in_order(server):
    lines = [req("ping", msg_id=i) for i in range(5)]
    lines.insert(2, json.dumps({"jsonrpc": "2.0", "method": "notifications/initialized"}))
    out = io.StringIO()
    server.serve(io.StringIO("\n".join(lines) + "\n"), out)
    responses = [json.loads(line) for line in out.getvalue().splitlines()]
    assert [r["id"] for r in responses] == [0, 1, 2, 3, 4]
    assert all(r["result"] == {} for r in responses)
