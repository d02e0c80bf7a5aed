"""``ctxforge`` command line.

Exit status: 0 success, 1 usage or parse error, 2 drift detected (``drift``
only), 3 lint errors (``lint`` only).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any, NoReturn

from . import __version__
from .corpus import CONFIG_FILENAME, ConfigError, CorpusConfig, CorpusError, fingerprint_tree, load_config, parse_corpus, scale_report
from .drift import DEFAULT_WINDOW_DAYS, ChangeLogParseError, VcsError, collect_changes, detect_drift, parse_timestamp, render_warning
from .index import CACHE_FILENAME, ContextIndex, build_index, load_index, save_index
from .lint import has_errors, lint_constitution
from .metrics import compute_stats, find_log_files, ingest_logs
from .orchestrator import route
from .server import serve
from .tools import call_tool, render_payload

EXIT_OK, EXIT_USAGE, EXIT_DRIFT, EXIT_LINT = 0, 1, 2, 3
ROOT_ENV = "CTXFORGE_ROOT"

log = logging.getLogger("ctxforge")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ctxforge", description="Codified-context tooling for AI coding agents.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--root", help=f"corpus root (default: ${ROOT_ENV} or the current directory)")
    parser.add_argument("--config", help=f"config file (default: <root>/{CONFIG_FILENAME})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def add(name: str, help_text: str, json_flag: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        if json_flag:
            p.add_argument("--json", action="store_true", help="emit JSON")
        return p

    add("index", "build the keyword index and persist the cache")
    p = add("query", "search knowledge documents")
    p.add_argument("text")
    p.add_argument("--k", type=_positive_int, default=None)
    p = add("find", "rank subsystems relevant to a task")
    p.add_argument("task")
    p.add_argument("--k", type=_positive_int, default=None)
    add("subsystems", "list subsystem keys and doc counts")
    p = add("files", "knowledge docs for a subsystem key")
    p.add_argument("key")
    p = add("suggest-agent", "suggest specialist agents for a task")
    p.add_argument("task")
    p.add_argument("--k", type=_positive_int, default=None)
    p = add("route", "fire trigger-table rules for a task and/or changed files")
    p.add_argument("--phase", required=True, choices=["pre", "post", "pre_change", "post_change"])
    p.add_argument("--task", default=None)
    p.add_argument("paths", nargs="*")
    p = add("drift", "warn about knowledge docs left stale by recent source changes")
    p.add_argument("--since-days", type=_positive_int, default=DEFAULT_WINDOW_DAYS)
    p.add_argument("--log", help="exported change-log JSON instead of running git")
    p.add_argument("--repo", help="git working tree (default: corpus root)")
    p.add_argument("--now", help="reference time, ISO-8601 (default: current time)")
    p = add("metrics", "interaction metrics from JSONL session logs")
    p.add_argument("dir")
    p.add_argument("--builtin", action="append", default=None, metavar="NAME", help="builtin agent name (repeatable)")
    add("lint", "check the constitution")
    p = add("scale", "tier file and line counts")
    p.add_argument("--source-glob", action="append", default=None, metavar="GLOB")
    add("serve", "serve the retrieval tools over stdio JSON-RPC", json_flag=False)
    return parser


# -- corpus / index loading -------------------------------------------------


class Context:
    def __init__(self, args: argparse.Namespace) -> None:
        root = args.root or os.environ.get(ROOT_ENV) or os.getcwd()
        self.root = Path(root)
        self.config_path = Path(args.config) if args.config else self.root / CONFIG_FILENAME
        self.config: CorpusConfig = load_config(self.root, args.config)
        self._corpus = None

    @property
    def cache_path(self) -> Path:
        return self.config_path.parent / CACHE_FILENAME

    def corpus(self):
        if self._corpus is None:
            self._corpus = parse_corpus(self.root, self.config)
            for diag in self._corpus.diagnostics:
                log.debug("%s", diag)
        return self._corpus

    def index(self) -> ContextIndex:
        cache = self.cache_path
        if cache.is_file():
            try:
                cached = load_index(cache)
            except (OSError, ValueError, KeyError, TypeError):
                cached = None
            if cached is not None and cached.corpus_fingerprint == fingerprint_tree(self.root, self.config):
                return cached
            index = build_index(self.corpus())
            try:
                save_index(index, cache)
            except OSError:
                pass
            return index
        return build_index(self.corpus())


def _emit(payload: Any) -> None:
    sys.stdout.write((payload if isinstance(payload, str) else render_payload(payload)) + "\n")


def _tool_args(**kwargs: Any) -> dict[str, Any]:
    return {k: v for k, v in kwargs.items() if v is not None}


# -- commands -------------------------------------------------------------


def cmd_index(ctx: Context, args: argparse.Namespace) -> int:
    corpus = ctx.corpus()
    index = build_index(corpus)
    save_index(index, ctx.cache_path)
    summary = {
        "cache": str(ctx.cache_path),
        "corpus_fingerprint": index.corpus_fingerprint,
        "docs": len(index.doc_keywords),
        "subsystems": len(index.docs_by_subsystem),
        "agents": len(index.agent_keywords),
    }
    if args.json:
        _emit(summary)
    else:
        print(
            f"Indexed {summary['docs']} docs in {summary['subsystems']} subsystems "
            f"and {summary['agents']} agents -> {summary['cache']}"
        )
    return EXIT_OK


def _print_hits(hits: list[dict[str, Any]], indent: str = "") -> None:
    for h in hits:
        print(f"{indent}{h['score']:>3}  {h['target']}  [{h['subsystem']}]  {', '.join(h['matched_tokens'])}")


def cmd_query(ctx: Context, args: argparse.Namespace) -> int:
    payload = call_tool(ctx.index(), "search_context_documents", _tool_args(query=args.text, k=args.k))
    if args.json:
        _emit(payload)
    elif not payload["found"]:
        print(f"No matching documents for {args.text!r}.")
    else:
        _print_hits(payload["hits"])
    return EXIT_OK


def cmd_find(ctx: Context, args: argparse.Namespace) -> int:
    payload = call_tool(ctx.index(), "find_relevant_context", _tool_args(task=args.task, k=args.k))
    if args.json:
        _emit(payload)
    elif not payload["found"]:
        print(f"No relevant context found for {args.task!r} (knowledge gap?).")
    else:
        for group in payload["subsystems"]:
            print(f"{group['subsystem']} (score {group['score']})")
            _print_hits(group["hits"], indent="  ")
    return EXIT_OK


def cmd_subsystems(ctx: Context, args: argparse.Namespace) -> int:
    payload = call_tool(ctx.index(), "list_subsystems", {})
    if args.json:
        _emit(payload)
    else:
        for item in payload["subsystems"]:
            print(f"{item['subsystem']}\t{item['doc_count']}")
    return EXIT_OK


def cmd_files(ctx: Context, args: argparse.Namespace) -> int:
    payload = call_tool(ctx.index(), "get_files_for_subsystem", {"key": args.key})
    if args.json:
        _emit(payload)
    elif not payload["found"]:
        print(f"Subsystem {args.key!r} not found: no knowledge documents exist for it.")
    else:
        for path in payload["files"]:
            print(path)
    return EXIT_OK


def cmd_suggest(ctx: Context, args: argparse.Namespace) -> int:
    payload = call_tool(ctx.index(), "suggest_agent", _tool_args(task=args.task, k=args.k))
    if args.json:
        _emit(payload)
    elif not payload["found"]:
        print(f"No agent suggestion for {args.task!r}.")
    else:
        for d in payload["suggestions"]:
            print(f"{d['score']:>3}  {d['agent']}  ({', '.join(d['evidence'])})")
    return EXIT_OK


def cmd_route(ctx: Context, args: argparse.Namespace) -> int:
    corpus = ctx.corpus()
    decisions = route(
        corpus.constitution.trigger_rules,
        args.phase,
        args.paths,
        args.task,
        registry=corpus.agent_names(),
    )
    if args.json:
        _emit({"decisions": [d.to_dict() for d in decisions]})
    elif not decisions:
        print("No trigger rule fired.")
    else:
        for d in decisions:
            print(f"{d.agent}\t{d.phase.value}\t{d.reason.value}\t{', '.join(d.evidence)}")
    return EXIT_OK


def cmd_drift(ctx: Context, args: argparse.Namespace) -> int:
    corpus = ctx.corpus()
    now = parse_timestamp(args.now) if args.now else None
    changes = collect_changes(args.repo or ctx.root, args.since_days, now=now, log_file=args.log)
    report = detect_drift(corpus, changes, args.since_days, now=now)
    if args.json:
        _emit(report.to_dict())
    else:
        sys.stdout.write(render_warning(report))
    return EXIT_DRIFT if report.is_stale else EXIT_OK


def cmd_metrics(ctx: Context, args: argparse.Namespace) -> int:
    files = find_log_files(args.dir)
    if not files:
        raise UsageError(f"no .jsonl files under {args.dir}")
    registry: frozenset[str] = frozenset()
    try:
        registry = ctx.corpus().agent_names()
    except CorpusError as exc:
        log.warning("agent registry unavailable (%s); no invocation will count as specialist", exc)
    builtin = args.builtin if args.builtin is not None else ctx.config.builtin_agents
    ingested = ingest_logs(files)
    for err in ingested.errors:
        log.warning("%s", err)
    stats = compute_stats(ingested.records, registry, builtin, ingested.skipped)
    if args.json:
        _emit(stats.to_dict())
        return EXIT_OK
    data = stats.to_dict()

    def fmt(value: float | None, pct: bool = False) -> str:
        if value is None:
            return "undefined"
        return f"{100 * value:.1f}%" if pct else f"{value:.2f}"

    rows = [
        ("Log files", len(files)),
        ("Sessions", stats.sessions),
        ("Human prompts", stats.human_prompts),
        ("Agent invocations", stats.agent_invocations),
        ("Agent turns", stats.agent_turns),
        ("Total interactions", stats.total),
        ("Prompts per session", fmt(data["prompts_per_session"])),
        ("Prompts <= 100 words", fmt(data["short_prompt_fraction"], pct=True)),
        ("Specialist invocations", stats.specialist_invocations),
        ("Builtin invocations", stats.builtin_invocations),
        ("Unclassifiable invocations", stats.unclassifiable_invocations),
        ("Skipped records", stats.skipped_records),
    ]
    width = max(len(label) for label, _ in rows)
    for label, value in rows:
        print(f"{label:<{width}}  {value}")
    if stats.top_agents:
        print("\nTop agents:")
        for agent, count in stats.top_agents[:10]:
            print(f"  {count:>6}  {agent}")
    return EXIT_OK


def cmd_lint(ctx: Context, args: argparse.Namespace) -> int:
    diags = lint_constitution(ctx.corpus())
    if args.json:
        _emit({"ok": not has_errors(diags), "diagnostics": [d.to_dict() for d in diags]})
    else:
        for d in diags:
            print(d)
            if d.source_row:
                print(f"    {d.source_row}")
        errors = sum(d.severity == "error" for d in diags)
        print(f"{errors} error(s), {len(diags) - errors} other diagnostic(s)")
    return EXIT_LINT if has_errors(diags) else EXIT_OK


def cmd_scale(ctx: Context, args: argparse.Namespace) -> int:
    corpus = ctx.corpus()
    globs = args.source_glob if args.source_glob is not None else ctx.config.source_globs
    report = scale_report(corpus, globs or None)
    if args.json:
        _emit(report.to_dict())
        return EXIT_OK
    for t in report.tiers:
        pct = f" / {t.percent_of_code:.1f}%" if t.percent_of_code is not None else ""
        print(f"{t.tier} {t.label:<20} {t.files:>4} files {t.lines:>8} lines{pct}")
    ratio = f" / {100 * report.ratio:.1f}%" if report.ratio is not None else ""
    print(f"{'Total context':<26} {report.total_files:>4} files {report.total_lines:>8} lines{ratio}")
    if report.source_lines is not None and not report.source_unmatched:
        print(f"Source: {report.source_files} files, {report.source_lines} lines")
    if report.source_unmatched:
        print(f"Source globs matched no files: {', '.join(report.source_globs)} (ratio omitted)")
    return EXIT_OK


def cmd_serve(ctx: Context, args: argparse.Namespace) -> int:
    serve(ctx.index())
    return EXIT_OK


COMMANDS = {
    "index": cmd_index,
    "query": cmd_query,
    "find": cmd_find,
    "subsystems": cmd_subsystems,
    "files": cmd_files,
    "suggest-agent": cmd_suggest,
    "route": cmd_route,
    "drift": cmd_drift,
    "metrics": cmd_metrics,
    "lint": cmd_lint,
    "scale": cmd_scale,
    "serve": cmd_serve,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(name)s: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        ctx = Context(args)
        return COMMANDS[args.command](ctx, args)
    except (CorpusError, ConfigError, UsageError, ChangeLogParseError, VcsError, ValueError) as exc:
        print(f"ctxforge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:  # pragma: no cover
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
