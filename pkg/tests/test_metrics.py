from __future__ import annotations

import json
import random
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from ctxforge.metrics import (
    InteractionRecord,
    RecordKind,
    compute_stats,
    find_log_files,
    ingest_logs,
    rename_fields,
)


def rec(kind, session="s1", text=None, agent=None):
    data = {"session_id": session, "timestamp": "2025-01-01T00:00:00Z", "kind": kind}
    if text is not None:
        data["text"] = text
    if agent is not None:
        data["agent"] = agent
    return data


def write_jsonl(path, rows):
    path.write_text("".join((r if isinstance(r, str) else json.dumps(r)) + "\n" for r in rows))
    return path


def test_three_files_ten_records(tmp_path):
    a = write_jsonl(tmp_path / "a.jsonl", [rec("human_prompt", text="hi")] * 3)
    b = write_jsonl(tmp_path / "b.jsonl", [rec("agent_turn")] * 2)
    (tmp_path / "sub").mkdir()
    c = write_jsonl(tmp_path / "sub" / "c.jsonl", [rec("agent_invocation", agent="x")] * 5)
    files = find_log_files(tmp_path)
    assert files == sorted([a, b, c])
    assert len(ingest_logs(files).records) == 10


def test_empty_file(tmp_path):
    result = ingest_logs([write_jsonl(tmp_path / "e.jsonl", [])])
    assert result.records == [] and result.skipped == 0
    stats = compute_stats(result.records)
    assert stats.total == 0 and stats.prompts_per_session is None and stats.short_prompt_fraction is None


def test_malformed_line_skipped(tmp_path):
    rows = [rec("agent_turn")] * 9
    rows.insert(4, "{broken json")
    result = ingest_logs([write_jsonl(tmp_path / "m.jsonl", rows)])
    assert len(result.records) == 9 and result.skipped == 1


def test_invalid_records_skipped(tmp_path):
    rows = [rec("nonsense"), rec("agent_invocation"), {"kind": "agent_turn"}, [1, 2], rec("human_prompt")]
    result = ingest_logs([write_jsonl(tmp_path / "bad.jsonl", rows)])
    assert result.records == [] and result.skipped == 5


def test_unreadable_file_is_an_error(tmp_path):
    result = ingest_logs([tmp_path / "missing.jsonl"])
    assert result.records == [] and len(result.errors) == 1


def test_short_prompt_boundary():
    words = lambda n: " ".join(["w"] * n)  # noqa: E731
    records = [InteractionRecord.from_dict(rec("human_prompt", text=words(n))) for n in (100, 101)]
    assert compute_stats(records).short_prompt_fraction == Fraction(1, 2)


def test_counts_and_rates():
    rows = [rec("human_prompt", "s1", "a b"), rec("human_prompt", "s2", "c"), rec("human_prompt", "s2", "d"),
            rec("agent_turn", "s1"), rec("agent_invocation", "s2", agent="net"),
            rec("agent_invocation", "s2", agent="Explore"), rec("agent_invocation", "s2", agent="mystery")]
    stats = compute_stats([InteractionRecord.from_dict(r) for r in rows], registry=["net"], builtin=["Explore"])
    assert (stats.sessions, stats.human_prompts, stats.agent_invocations, stats.agent_turns) == (2, 3, 3, 1)
    assert stats.total == stats.human_prompts + stats.agent_turns == 4
    assert stats.prompts_per_session == Fraction(3, 2)
    assert (stats.specialist_invocations, stats.builtin_invocations, stats.unclassifiable_invocations) == (1, 1, 1)
    assert stats.top_agents == (("Explore", 1), ("mystery", 1), ("net", 1))
    assert json.loads(json.dumps(stats.to_dict()))["prompts_per_session"] == 1.5


def test_adapter_maps_foreign_shape(tmp_path):
    rows = [{"conv": "c1", "ts": "2025-01-01T00:00:00Z", "type": "user", "content": "hello"},
            {"conv": "c1", "ts": "2025-01-01T00:00:01Z", "type": "assistant"}]
    adapter = rename_fields({"conv": "session_id", "ts": "timestamp", "type": "kind", "content": "text"},
                            {"user": "human_prompt", "assistant": "agent_turn"})
    result = ingest_logs([write_jsonl(tmp_path / "f.jsonl", rows)], adapter=adapter)
    assert [r.kind for r in result.records] == [RecordKind.HUMAN_PROMPT, RecordKind.AGENT_TURN]


# -- properties -----------------------------------------------------------

record_dicts = st.one_of(
    st.builds(lambda s, t: rec("human_prompt", s, t), st.sampled_from("abc"), st.text(" xy", max_size=300)),
    st.builds(lambda s: rec("agent_turn", s), st.sampled_from("abc")),
    st.builds(lambda s, a: rec("agent_invocation", s, agent=a), st.sampled_from("abc"), st.sampled_from(["p", "q", "r", "z"])),
)


@settings(max_examples=200, deadline=None)
@given(st.lists(record_dicts, max_size=40), st.randoms())
def test_partition_and_permutation_invariance(rows, rnd):
    records = [InteractionRecord.from_dict(r) for r in rows]
    stats = compute_stats(records, registry=["p"], builtin=["q"])
    assert stats.specialist_invocations + stats.builtin_invocations + stats.unclassifiable_invocations == stats.agent_invocations
    assert sum(n for _, n in stats.top_agents) == stats.agent_invocations
    assert stats.total == stats.human_prompts + stats.agent_turns
    if stats.short_prompt_fraction is not None:
        assert 0 <= stats.short_prompt_fraction <= 1
    shuffled = list(records)
    rnd.shuffle(shuffled)
    assert compute_stats(shuffled, registry=["p"], builtin=["q"]) == stats


def test_randomized_recount(tmp_path):
    rng = random.Random(3)
    for case in range(500):
        rows = []
        for _ in range(rng.randint(0, 30)):
            kind = rng.choice(["human_prompt", "agent_turn", "agent_invocation"])
            session = rng.choice(["s1", "s2", "s3", "s4"])
            if kind == "human_prompt":
                rows.append(rec(kind, session, " ".join(["w"] * rng.randint(0, 150))))
            elif kind == "agent_invocation":
                rows.append(rec(kind, session, agent=rng.choice(["a", "b", "Plan"])))
            else:
                rows.append(rec(kind, session))
        bad = rng.randint(0, 2)
        lines = rows + ["not json"] * bad
        rng.shuffle(lines)
        result = ingest_logs([write_jsonl(tmp_path / f"{case}.jsonl", lines)])
        stats = compute_stats(result.records, registry=["a"], builtin=["Plan"], skipped=result.skipped)

        prompts = [r for r in rows if r["kind"] == "human_prompt"]
        invocations = [r["agent"] for r in rows if r["kind"] == "agent_invocation"]
        sessions = {r["session_id"] for r in rows}
        assert result.skipped == bad
        assert stats.human_prompts == len(prompts)
        assert stats.agent_turns == sum(r["kind"] == "agent_turn" for r in rows)
        assert stats.sessions == len(sessions)
        assert stats.specialist_invocations == invocations.count("a")
        assert stats.builtin_invocations == invocations.count("Plan")
        assert stats.unclassifiable_invocations == invocations.count("b")
        if prompts:
            short = sum(len(p["text"].split()) <= 100 for p in prompts)
            assert stats.short_prompt_fraction == Fraction(short, len(prompts))
            assert stats.prompts_per_session == Fraction(len(prompts), len(sessions))
