"""Codified-context tooling for AI coding agents.

Parses a project's constitution, agent specs and knowledge docs, serves
keyword retrieval over stdio JSON-RPC, routes work to specialist agents,
flags stale docs from git history and summarises session logs.
"""

__version__ = "0.1.0"

from .corpus import (  # noqa: E402
    AgentSpec,
    Capability,
    Constitution,
    ContextCorpus,
    CorpusConfig,
    CorpusError,
    Diagnostic,
    KnowledgeDoc,
    ParseError,
    Phase,
    TriggerRule,
    load_config,
    parse_agent_spec,
    parse_corpus,
    parse_trigger_table,
    scale_report,
)
from .index import (  # noqa: E402
    ContextIndex,
    RelevanceHit,
    SubsystemNotFound,
    build_index,
    find_relevant_context,
    get_files_for_subsystem,
    list_subsystems,
    search_context_documents,
)
from .tokens import tokenize  # noqa: E402
from .orchestrator import RoutingDecision, route, suggest_agent  # noqa: E402

__all__ = [
    "AgentSpec",
    "Capability",
    "Constitution",
    "ContextCorpus",
    "ContextIndex",
    "CorpusConfig",
    "CorpusError",
    "Diagnostic",
    "KnowledgeDoc",
    "ParseError",
    "Phase",
    "RelevanceHit",
    "RoutingDecision",
    "SubsystemNotFound",
    "TriggerRule",
    "build_index",
    "find_relevant_context",
    "get_files_for_subsystem",
    "list_subsystems",
    "load_config",
    "parse_agent_spec",
    "parse_corpus",
    "parse_trigger_table",
    "route",
    "scale_report",
    "search_context_documents",
    "suggest_agent",
    "tokenize",
]
