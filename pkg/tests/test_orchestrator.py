from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import FIXTURES
from ctxforge.corpus import Phase, TriggerRule, parse_corpus
from ctxforge.index import build_index
from ctxforge.orchestrator import Reason, RoutingDecision, parse_phase, route, suggest_agent


@pytest.fixture(scope="module")
def game():
    corpus = parse_corpus(FIXTURES / "game")
    return corpus, build_index(corpus)


def oracle_route(rules, phase, paths, task):
    tokens = set(oracles.tokenize(task or ""))
    fired = []
    for rule in rules:
        if rule.phase is not phase or rule.agent in fired:
            continue
        if any(oracles.glob_match(p, g) for p in paths for g in rule.file_globs) or tokens & set(rule.keywords):
            fired.append(rule.agent)
    return fired


ROUTING_CASES = [
    (Phase.PRE_CHANGE, [], "rework network sync for lobby", "network-protocol-designer"),
    (Phase.PRE_CHANGE, [], "camera drifts when zooming", "coordinate-wizard"),
    (Phase.PRE_CHANGE, ["src/Abilities/Fireball.cs"], None, "ability-designer"),
    (Phase.POST_CHANGE, ["src/Core/Scheduler.cs"], None, "systems-designer"),
    (Phase.POST_CHANGE, ["src/Network/Packet.cs"], None, "code-reviewer-game-dev"),
]


@pytest.mark.parametrize("phase,paths,task,agent", ROUTING_CASES)
def test_trigger_rows_fire(game, phase, paths, task, agent):
    corpus, _ = game
    decisions = route(corpus.constitution.trigger_rules, phase, paths, task, registry=corpus.agent_names())
    assert agent in [d.agent for d in decisions]
    assert [d.agent for d in decisions] == oracle_route(corpus.constitution.trigger_rules, phase, paths, task)


def test_post_glob_evidence(game):
    corpus, _ = game
    (decision,) = route(corpus.constitution.trigger_rules, "post", ["src/Ecs/Systems/Move.cs"])
    assert decision == RoutingDecision("code-reviewer-game-dev", Phase.POST_CHANGE, Reason.GLOB_MATCH, ("src/Ecs/**",))


def test_phases_are_separate(game):
    corpus, _ = game
    rules = corpus.constitution.trigger_rules
    assert route(rules, Phase.POST_CHANGE, [], "network sync") == []
    assert route(rules, Phase.PRE_CHANGE, ["src/Ecs/World.cs"]) == []


def test_empty_rules_never_fire():
    assert route([], Phase.PRE_CHANGE, ["src/a.cs"], "anything at all") == []


def test_keyword_must_be_whole_token():
    rule = TriggerRule(Phase.PRE_CHANGE, (), ("sync",), "net")
    assert route([rule], Phase.PRE_CHANGE, task_text="resync everything") == []
    assert [d.reason for d in route([rule], Phase.PRE_CHANGE, task_text="Sync!")] == [Reason.KEYWORD_MATCH]


def test_registry_filters_unknown_agents():
    rule = TriggerRule(Phase.PRE_CHANGE, (), ("sync",), "ghost")
    assert route([rule], Phase.PRE_CHANGE, task_text="sync", registry={"net"}) == []


def test_parse_phase_aliases():
    assert parse_phase("pre") is Phase.PRE_CHANGE
    assert parse_phase("post-change") is Phase.POST_CHANGE
    with pytest.raises(ValueError):
        parse_phase("during")


def test_decision_needs_evidence():
    with pytest.raises(ValueError):
        RoutingDecision("a", Phase.PRE_CHANGE, Reason.SUGGESTION, ())


def test_suggest_camera(game):
    _, index = game
    top = suggest_agent(index, "fix camera jitter in isometric view")[0]
    assert top.agent == "coordinate-wizard"
    assert set(top.evidence) == {"camera", "isometric"}
    assert top.phase is Phase.PRE_CHANGE and top.reason is Reason.SUGGESTION


def test_suggest_matches_oracle_ranking(game):
    _, index = game
    task = "review networking change end to end"
    expected = oracles.brute_search(task, {a: set(k) for a, k in index.agent_keywords.items()}, 3)
    got = [(d.agent, d.score, list(d.evidence)) for d in suggest_agent(index, task)]
    assert got == expected
    assert got[0][0] == "code-reviewer-game-dev"


def test_suggest_closed_over_registry(game):
    corpus, index = game
    names = corpus.agent_names()
    for task in ["network sync", "camera", "design review", "zzz", ""]:
        assert all(d.agent in names for d in suggest_agent(index, task, k=10))
    assert suggest_agent(index, "zzz qqq") == []


# -- properties -----------------------------------------------------------

PATHS = ["src/Ecs/A.cs", "src/Network/B.cs", "src/Core/C.cs", "src/Abilities/D.cs", "docs/x.md", "src/UI/E.cs"]
GLOBS = ["src/Ecs/**", "src/Network/**", "src/Core/*.cs", "**/*.md", "src/*/D.cs", "src/UI/?.cs"]
KEYWORDS = ["network", "sync", "camera", "design", "abilities"]


@st.composite
def rule_lists(draw):
    rules = []
    for _ in range(draw(st.integers(0, 6))):
        globs = tuple(draw(st.lists(st.sampled_from(GLOBS), max_size=2, unique=True)))
        kws = tuple(draw(st.lists(st.sampled_from(KEYWORDS), max_size=2, unique=True)))
        if not globs and not kws:
            kws = ("sync",)
        rules.append(TriggerRule(draw(st.sampled_from(list(Phase))), globs, kws, draw(st.sampled_from("abcd"))))
    return rules


tasks = st.lists(st.sampled_from(KEYWORDS + ["the", "fix", "resync"]), max_size=4).map(" ".join)


@settings(max_examples=200, deadline=None)
@given(rule_lists(), st.sampled_from(list(Phase)), st.lists(st.sampled_from(PATHS), max_size=4), tasks)
def test_route_matches_oracle(rules, phase, paths, task):
    decisions = route(rules, phase, paths, task)
    assert [d.agent for d in decisions] == oracle_route(rules, phase, sorted(set(paths)), task)
    assert all(d.phase is phase and d.evidence for d in decisions)


@settings(max_examples=100, deadline=None)
@given(rule_lists(), st.sampled_from(list(Phase)), st.lists(st.sampled_from(PATHS), max_size=4), tasks, st.randoms())
def test_route_stable_under_path_permutation(rules, phase, paths, task, rnd):
    shuffled = list(paths)
    rnd.shuffle(shuffled)
    assert route(rules, phase, paths, task) == route(rules, phase, shuffled, task)


@settings(max_examples=100, deadline=None)
@given(rule_lists(), st.sampled_from(list(Phase)), st.lists(st.sampled_from(PATHS), max_size=4), tasks, st.sampled_from(PATHS))
def test_route_monotone_in_paths(rules, phase, paths, task, extra):
    before = {d.agent for d in route(rules, phase, paths, task)}
    after = {d.agent for d in route(rules, phase, paths + [extra], task)}
    assert before <= after


def test_suggest_oracle_seeded(game):
    _, index = game
    vocab = sorted({w for kws in index.agent_keywords.values() for w in kws}) + ["zzz", "the", "net"]
    rng = random.Random(11)
    agents = {a: set(k) for a, k in index.agent_keywords.items()}
    for _ in range(300):
        task = " ".join(rng.choice(vocab) for _ in range(rng.randint(0, 5)))
        k = rng.randint(1, 6)
        got = [(d.agent, d.score, list(d.evidence)) for d in suggest_agent(index, task, k)]
        assert got == oracles.brute_search(task, agents, k)
