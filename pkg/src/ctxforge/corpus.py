"""Parse the on-disk context corpus into validated, immutable domain objects.

A corpus has three tiers: one always-loaded constitution (tier 1), specialist
agent specs (tier 2) and per-subsystem knowledge documents (tier 3). The
default layout is ``CONSTITUTION.md`` plus ``agents/`` and ``context/`` under
the corpus root; ``ctxforge.json`` overrides it.
"""

from __future__ import annotations

import hashlib
import json
import os
import posixpath
import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path, PurePosixPath
from typing import Any

from . import frontmatter
from .globs import match_any
from .tokens import tokenize

TIER1, TIER2, TIER3 = "Tier1", "Tier2", "Tier3"
CONFIG_FILENAME = "ctxforge.json"
DEFAULT_BUDGET = 800
READ_ONLY_MARKER = "READ-ONLY"
READ_ONLY_SCAN_LINES = 10
HIGHER_CAPABILITY_MODEL = "higher-capability"
TRIGGER_SECTION = "orchestration triggers"


class Phase(str, Enum):
    PRE_CHANGE = "pre_change"
    POST_CHANGE = "post_change"


class Capability(str, Enum):
    HIGHER = "higher"
    STANDARD = "standard"


class CorpusError(Exception):
    """Fatal corpus problem: missing constitution, duplicate keys or names."""


class ConfigError(CorpusError):
    pass


class ParseError(ValueError):
    def __init__(self, path: str, line: int, message: str) -> None:
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line
        self.message = message


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning" | "info"
    code: str
    message: str
    path: str | None = None
    line: int | None = None
    source_row: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def __str__(self) -> str:
        where = self.path or ""
        if self.line is not None:
            where = f"{where}:{self.line}"
        prefix = f"{where}: " if where else ""
        return f"{prefix}{self.severity}: [{self.code}] {self.message}"


@dataclass(frozen=True)
class CorpusConfig:
    constitution: str = "CONSTITUTION.md"
    agents_dir: str = "agents"
    docs_dir: str = "context"
    source_globs: tuple[str, ...] = ()
    constitution_budget: int = DEFAULT_BUDGET
    builtin_agents: tuple[str, ...] = ()

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CorpusConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kwargs: dict[str, Any] = {}
        for key in ("constitution", "agents_dir", "docs_dir"):
            if key in data:
                if not isinstance(data[key], str) or not data[key]:
                    raise ConfigError(f"{key} must be a non-empty string")
                kwargs[key] = data[key]
        for key in ("source_globs", "builtin_agents"):
            if key in data:
                value = data[key]
                if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                    raise ConfigError(f"{key} must be a list of strings")
                kwargs[key] = tuple(value)
        if "constitution_budget" in data:
            budget = data["constitution_budget"]
            if isinstance(budget, bool) or not isinstance(budget, int) or budget <= 0:
                raise ConfigError("constitution_budget must be a positive integer")
            kwargs["constitution_budget"] = budget
        return cls(**kwargs)


def load_config(root: str | os.PathLike[str], path: str | os.PathLike[str] | None = None) -> CorpusConfig:
    """Read ``ctxforge.json`` from ``root`` (or ``path``); defaults when absent."""
    cfg_path = Path(path) if path is not None else Path(root) / CONFIG_FILENAME
    if not cfg_path.is_file():
        if path is not None:
            raise ConfigError(f"config file not found: {cfg_path}")
        return CorpusConfig()
    try:
        data = json.loads(cfg_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {cfg_path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{cfg_path}: top level must be a JSON object")
    return CorpusConfig.from_dict(data)


# -- domain types ---------------------------------------------------------


@dataclass(frozen=True)
class KnowledgeDoc:
    path: str
    title: str
    subsystem: str
    keywords: frozenset[str]
    headings: tuple[str, ...]
    source_globs: tuple[str, ...]
    line_count: int
    tier: str = field(default=TIER3, init=False)


@dataclass(frozen=True)
class AgentSpec:
    name: str
    description: str
    tools: tuple[str, ...]
    capability: Capability
    domain_keywords: frozenset[str]
    read_only: bool
    path: str
    body: str = field(default="", repr=False)
    # physical layout of the file, not part of the agent's identity
    line_count: int = field(default=0, compare=False)
    tier: str = field(default=TIER2, init=False)


@dataclass(frozen=True)
class TriggerRule:
    phase: Phase
    file_globs: tuple[str, ...]
    keywords: tuple[str, ...]
    agent: str
    source_row: str = ""

    def __post_init__(self) -> None:
        if not self.file_globs and not self.keywords:
            raise ValueError("trigger rule needs at least one file glob or keyword")


@dataclass(frozen=True)
class Constitution:
    path: str
    line_count: int
    doc_links: tuple[str, ...]
    trigger_rules: tuple[TriggerRule, ...]
    budget: int = DEFAULT_BUDGET
    text: str = field(default="", repr=False)
    tier: str = field(default=TIER1, init=False)


@dataclass(frozen=True)
class ContextCorpus:
    constitution: Constitution
    agents: tuple[AgentSpec, ...]
    docs: tuple[KnowledgeDoc, ...]
    root: str
    config: CorpusConfig = field(default_factory=CorpusConfig)
    diagnostics: tuple[Diagnostic, ...] = ()
    # (repo-relative path, sha256 hex of content) for every parsed corpus file
    file_digests: tuple[tuple[str, str], ...] = ()

    @property
    def tier_counts(self) -> tuple[int, int, int]:
        return (1, len(self.agents), len(self.docs))

    @property
    def total_files(self) -> int:
        return sum(self.tier_counts)

    @property
    def tier_lines(self) -> tuple[int, int, int]:
        return (
            self.constitution.line_count,
            sum(a.line_count for a in self.agents),
            sum(d.line_count for d in self.docs),
        )

    @property
    def total_lines(self) -> int:
        return sum(self.tier_lines)

    @property
    def corpus_paths(self) -> frozenset[str]:
        return frozenset(
            [self.constitution.path, *(a.path for a in self.agents), *(d.path for d in self.docs)]
        )

    def agent_names(self) -> frozenset[str]:
        return frozenset(a.name for a in self.agents)


# -- text helpers ---------------------------------------------------------


def count_lines(text: str | bytes) -> int:
    """Newline-delimited line count; a final unterminated line counts as one."""
    nl = "\n" if isinstance(text, str) else b"\n"
    if not text:
        return 0
    return text.count(nl) + (0 if text.endswith(nl) else 1)


_NON_KEY_RE = re.compile(r"[^a-z0-9]+")
_KEY_RE = re.compile(r"^[a-z0-9]+(?:-[a-z0-9]+)*$")


def normalize_key(raw: str) -> str:
    """``'Drop-System'`` -> ``'drop-system'``; any non-alphanumeric run becomes one hyphen."""
    return _NON_KEY_RE.sub("-", raw.lower()).strip("-")


_HEADING_RE = re.compile(r"^(#{1,6})[ \t]+(.+?)[ \t]*#*[ \t]*$")
_FENCE_RE = re.compile(r"^\s*(```|~~~)")


def iter_markdown_lines(text: str, first_line: int = 1) -> Iterator[tuple[int, str]]:
    """Yield ``(line number, line)`` for lines outside fenced code blocks."""
    fence: str | None = None
    for offset, line in enumerate(text.splitlines()):
        m = _FENCE_RE.match(line)
        if m:
            marker = m.group(1)
            if fence is None:
                fence = marker
            elif fence == marker:
                fence = None
            continue
        if fence is None:
            yield first_line + offset, line


def extract_headings(text: str) -> list[tuple[int, str, int]]:
    """``(level, heading text, line number)`` for each ATX heading."""
    out = []
    for lineno, line in iter_markdown_lines(text):
        m = _HEADING_RE.match(line)
        if m:
            out.append((len(m.group(1)), m.group(2).strip(), lineno))
    return out


def _normalize_keywords(values: Iterable[str]) -> frozenset[str]:
    out = set()
    for value in values:
        for word in value.lower().split():
            if len(word) >= 2:
                out.add(word)
    return frozenset(out)


# -- tier 3 ---------------------------------------------------------------


def parse_knowledge_doc(text: str, path: str) -> KnowledgeDoc:
    try:
        doc = frontmatter.split(text)
    except frontmatter.FrontmatterError as exc:
        raise ParseError(path, exc.line, exc.message) from exc
    stem = PurePosixPath(path).stem
    subsystem = normalize_key(frontmatter.unquote(doc.meta.get("subsystem", "")) or stem)
    if not subsystem:
        raise ParseError(path, 1, f"cannot derive a subsystem key from {stem!r}")
    headings = extract_headings(doc.body)
    title = next((h for level, h, _ in headings if level == 1), stem)
    return KnowledgeDoc(
        path=path,
        title=title,
        subsystem=subsystem,
        keywords=_normalize_keywords(frontmatter.parse_list(doc.meta.get("keywords", ""))),
        headings=tuple(h for _, h, _ in headings),
        source_globs=tuple(frontmatter.parse_list(doc.meta.get("source_globs", ""))),
        line_count=count_lines(text),
    )


# -- tier 2 ---------------------------------------------------------------


def parse_agent_spec(text: str, path: str) -> AgentSpec:
    try:
        doc = frontmatter.split(text, required=True)
    except frontmatter.FrontmatterError as exc:
        raise ParseError(path, exc.line, exc.message) from exc
    meta = doc.meta
    name = frontmatter.unquote(meta.get("name", ""))
    if not name:
        raise ParseError(path, 1, "frontmatter has no 'name'")
    if not _KEY_RE.match(name):
        raise ParseError(path, 1, f"agent name {name!r} is not a lowercase hyphenated identifier")
    description = frontmatter.unquote(meta.get("description", ""))
    model = frontmatter.unquote(meta.get("model", "")).strip().lower()
    capability = Capability.HIGHER if model == HIGHER_CAPABILITY_MODEL else Capability.STANDARD

    head = doc.body.splitlines()[:READ_ONLY_SCAN_LINES]
    read_only = any(READ_ONLY_MARKER in line for line in head)

    keywords = set(tokenize(name)) | set(tokenize(description))
    for level, heading, _ in extract_headings(doc.body):
        if level <= 2:
            keywords.update(tokenize(heading))

    return AgentSpec(
        name=name,
        description=description,
        tools=tuple(frontmatter.parse_list(meta.get("tools", ""))),
        capability=capability,
        domain_keywords=frozenset(keywords),
        read_only=read_only,
        path=path,
        body=doc.body,
        line_count=count_lines(text),
    )


def serialize_agent_spec(spec: AgentSpec) -> str:
    model = HIGHER_CAPABILITY_MODEL if spec.capability is Capability.HIGHER else "standard"
    meta: dict[str, str | list[str]] = {"name": spec.name}
    if spec.description:
        meta["description"] = spec.description
    if spec.tools:
        meta["tools"] = list(spec.tools)
    meta["model"] = model
    return frontmatter.dump(meta, spec.body)


# -- tier 1 ---------------------------------------------------------------


_LINK_RE = re.compile(r"\[[^\]]*\]\(\s*<?([^)\s>]+)>?(?:\s+\"[^\"]*\")?\s*\)")
_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*:")


def iter_doc_links(text: str, constitution_path: str) -> Iterator[tuple[int, str]]:
    """Relative ``.md`` link targets as repo-relative paths, with line numbers."""
    base = posixpath.dirname(constitution_path)
    for lineno, line in iter_markdown_lines(text):
        for m in _LINK_RE.finditer(line):
            target = m.group(1).split("#", 1)[0]
            if not target or _SCHEME_RE.match(target) or not target.lower().endswith(".md"):
                continue
            if target.startswith("/"):
                resolved = target.lstrip("/")
            else:
                resolved = posixpath.normpath(posixpath.join(base, target))
            yield lineno, resolved


_SEPARATOR_CELL_RE = re.compile(r"^:?-+:?$")
_EXTENSION_RE = re.compile(r"\.[A-Za-z0-9]+$")
_PHASES = {"prechange": Phase.PRE_CHANGE, "postchange": Phase.POST_CHANGE}


def _split_row(line: str) -> list[str]:
    body = line.strip()
    if body.startswith("|"):
        body = body[1:]
    if body.endswith("|") and not body.endswith("\\|"):
        body = body[:-1]
    cells = re.split(r"(?<!\\)\|", body)
    return [c.replace("\\|", "|").strip() for c in cells]


def is_glob_signal(entry: str) -> bool:
    return "/" in entry or "*" in entry or _EXTENSION_RE.search(entry) is not None


def parse_trigger_row(row: str) -> TriggerRule:
    """One ``Trigger | Signal | Agent`` data row; raises ``ValueError`` if malformed."""
    cells = _split_row(row)
    if len(cells) != 3:
        raise ValueError(f"expected 3 cells (Trigger | Signal | Agent), got {len(cells)}")
    trigger, signal, agent = cells
    phase = _PHASES.get(re.sub(r"[\s_-]+", "", trigger.lower()))
    if phase is None:
        raise ValueError(f"unknown trigger {trigger!r} (expected Pre-change or Post-change)")
    agent = agent.strip("`* ")
    if not agent:
        raise ValueError("empty agent cell")
    globs: list[str] = []
    keywords: list[str] = []
    for entry in signal.split(","):
        entry = entry.strip().strip("`").strip()
        if not entry:
            continue
        if is_glob_signal(entry):
            globs.append(entry)
        else:
            keywords.extend(tokenize(entry))
    if not globs and not keywords:
        raise ValueError("empty signal cell")
    return TriggerRule(
        phase=phase,
        file_globs=tuple(dict.fromkeys(globs)),
        keywords=tuple(dict.fromkeys(keywords)),
        agent=agent,
        source_row=row.strip(),
    )


def parse_trigger_table(
    constitution_text: str,
    diagnostics: list[Diagnostic] | None = None,
    path: str | None = None,
) -> list[TriggerRule]:
    """Rules from every ``Trigger | Signal | Agent`` table under an
    "Orchestration Triggers" heading.

    Problems are appended to ``diagnostics`` rather than raised: a malformed
    row is dropped, and a missing section yields no rules.
    """
    diags = diagnostics if diagnostics is not None else []
    lines = list(iter_markdown_lines(constitution_text))
    rules: list[TriggerRule] = []
    found_section = False
    section_level: int | None = None
    in_table = False
    header_ok = False

    for lineno, line in lines:
        heading = _HEADING_RE.match(line)
        if heading:
            level = len(heading.group(1))
            if section_level is not None and level <= section_level:
                section_level = None
            if TRIGGER_SECTION in heading.group(2).lower():
                section_level = level
                found_section = True
            in_table = False
            continue
        if section_level is None:
            continue
        if not line.lstrip().startswith("|"):
            in_table = False
            continue
        if not in_table:
            in_table = True
            header_ok = [c.lower() for c in _split_row(line)] == ["trigger", "signal", "agent"]
            continue
        if not header_ok:
            continue
        cells = _split_row(line)
        if cells and all(_SEPARATOR_CELL_RE.match(c) for c in cells):
            continue
        try:
            rules.append(parse_trigger_row(line))
        except ValueError as exc:
            diags.append(
                Diagnostic("warning", "malformed-trigger-row", str(exc), path, lineno, line.strip())
            )

    if not found_section:
        diags.append(
            Diagnostic(
                "warning",
                "missing-trigger-section",
                "no 'Orchestration Triggers' section; routing cannot occur",
                path,
            )
        )
    return rules


def parse_constitution(
    text: str,
    path: str,
    budget: int = DEFAULT_BUDGET,
    diagnostics: list[Diagnostic] | None = None,
) -> Constitution:
    links = tuple(dict.fromkeys(target for _, target in iter_doc_links(text, path)))
    rules = parse_trigger_table(text, diagnostics, path)
    return Constitution(
        path=path,
        line_count=count_lines(text),
        doc_links=links,
        trigger_rules=tuple(rules),
        budget=budget,
        text=text,
    )


# -- corpus ---------------------------------------------------------------


def _rel(root: Path, path: Path) -> str:
    return path.relative_to(root).as_posix()


def _markdown_files(root: Path, directory: str) -> list[Path]:
    base = root / directory
    if not base.is_dir():
        return []
    return sorted((p for p in base.rglob("*.md") if p.is_file()), key=lambda p: _rel(root, p))


def corpus_files(root: str | os.PathLike[str], config: CorpusConfig) -> list[tuple[str, Path]]:
    """Every file the corpus is built from, as ``(repo-relative path, absolute path)``."""
    base = Path(root)
    files = [(config.constitution, base / config.constitution)]
    for directory in (config.agents_dir, config.docs_dir):
        files.extend((_rel(base, p), p) for p in _markdown_files(base, directory))
    return files


def _fingerprint_entries(entries: Iterable[tuple[str, str]]) -> str:
    h = hashlib.sha256()
    for rel, digest in sorted(entries):
        h.update(f"{rel}\0{digest}\n".encode())
    return h.hexdigest()


def fingerprint_tree(root: str | os.PathLike[str], config: CorpusConfig) -> str:
    """Content hash of the corpus files; modification times do not enter it."""
    entries = []
    for rel, path in corpus_files(root, config):
        if path.is_file():
            entries.append((rel, hashlib.sha256(path.read_bytes()).hexdigest()))
    return _fingerprint_entries(entries)


def parse_corpus(root: str | os.PathLike[str], config: CorpusConfig | None = None) -> ContextCorpus:
    """Parse the corpus under ``root``.

    Files that fail to parse become error diagnostics. Raises ``CorpusError``
    for a missing constitution, duplicate subsystem keys or duplicate agent
    names.
    """
    base = Path(root)
    if not base.is_dir():
        raise CorpusError(f"corpus root is not a directory: {base}")
    config = config or load_config(base)
    diags: list[Diagnostic] = []
    digests: list[tuple[str, str]] = []

    def read(rel: str, path: Path) -> str | None:
        data = path.read_bytes()
        digests.append((rel, hashlib.sha256(data).hexdigest()))
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            diags.append(Diagnostic("error", "parse-error", f"not valid UTF-8: {exc}", rel))
            return None

    const_path = base / config.constitution
    if not const_path.is_file():
        raise CorpusError(f"constitution not found: {const_path}")
    const_rel = PurePosixPath(config.constitution).as_posix()
    const_text = read(const_rel, const_path)
    if const_text is None:
        raise CorpusError(f"constitution is not valid UTF-8: {const_path}")
    constitution = parse_constitution(const_text, const_rel, config.constitution_budget, diags)

    agents: list[AgentSpec] = []
    seen_agents: dict[str, str] = {}
    for path in _markdown_files(base, config.agents_dir):
        rel = _rel(base, path)
        text = read(rel, path)
        if text is None:
            continue
        try:
            spec = parse_agent_spec(text, rel)
        except ParseError as exc:
            diags.append(Diagnostic("error", "parse-error", exc.message, rel, exc.line))
            continue
        if spec.name in seen_agents:
            raise CorpusError(f"duplicate agent name {spec.name!r}: {seen_agents[spec.name]} and {rel}")
        seen_agents[spec.name] = rel
        agents.append(spec)

    docs: list[KnowledgeDoc] = []
    seen_subsystems: dict[str, str] = {}
    for path in _markdown_files(base, config.docs_dir):
        rel = _rel(base, path)
        text = read(rel, path)
        if text is None:
            continue
        try:
            doc = parse_knowledge_doc(text, rel)
        except ParseError as exc:
            diags.append(Diagnostic("error", "parse-error", exc.message, rel, exc.line))
            continue
        if doc.subsystem in seen_subsystems:
            raise CorpusError(
                f"duplicate subsystem key {doc.subsystem!r}: {seen_subsystems[doc.subsystem]} and {rel}"
            )
        seen_subsystems[doc.subsystem] = rel
        docs.append(doc)

    return ContextCorpus(
        constitution=constitution,
        agents=tuple(agents),
        docs=tuple(docs),
        root=str(base),
        config=config,
        diagnostics=tuple(diags),
        file_digests=tuple(sorted(digests)),
    )


def corpus_fingerprint(corpus: ContextCorpus) -> str:
    return _fingerprint_entries(corpus.file_digests)


# -- scale ----------------------------------------------------------------


@dataclass(frozen=True)
class TierStats:
    tier: str
    label: str
    files: int
    lines: int
    percent_of_code: float | None = None


@dataclass(frozen=True)
class ScaleReport:
    tiers: tuple[TierStats, ...]
    total_files: int
    total_lines: int
    source_globs: tuple[str, ...] = ()
    source_files: int | None = None
    source_lines: int | None = None
    ratio: float | None = None
    source_unmatched: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "tiers": [
                {
                    "tier": t.tier,
                    "label": t.label,
                    "files": t.files,
                    "lines": t.lines,
                    "percent_of_code": t.percent_of_code,
                }
                for t in self.tiers
            ],
            "total_files": self.total_files,
            "total_lines": self.total_lines,
            "source_globs": list(self.source_globs),
            "source_files": self.source_files,
            "source_lines": self.source_lines,
            "ratio": self.ratio,
            "source_unmatched": self.source_unmatched,
        }


def _walk_files(root: Path) -> Iterator[Path]:
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if d != ".git")
        for name in sorted(filenames):
            yield Path(dirpath) / name


def scale_report(corpus: ContextCorpus, source_globs: Iterable[str] | None = None) -> ScaleReport:
    """Per-tier file and line totals, plus the knowledge-to-code ratio when
    source globs are given. Globs matching no file leave the ratio unset and
    set ``source_unmatched``."""
    globs = tuple(source_globs) if source_globs is not None else ()
    src_files = src_lines = None
    ratio = None
    unmatched = False
    if globs:
        root = Path(corpus.root)
        skip = corpus.corpus_paths
        src_files = src_lines = 0
        for path in _walk_files(root):
            rel = _rel(root, path)
            if rel in skip or not match_any(rel, globs):
                continue
            src_files += 1
            src_lines += count_lines(path.read_bytes())
        if src_files == 0 or src_lines == 0:
            unmatched = True
        else:
            ratio = corpus.total_lines / src_lines

    def pct(lines: int) -> float | None:
        return 100.0 * lines / src_lines if ratio is not None and src_lines else None

    counts, lines = corpus.tier_counts, corpus.tier_lines
    labels = ("Constitution", "Specialized Agents", "Knowledge Base")
    tiers = tuple(
        TierStats(tier, label, n, ln, pct(ln))
        for tier, label, n, ln in zip((TIER1, TIER2, TIER3), labels, counts, lines)
    )
    return ScaleReport(
        tiers=tiers,
        total_files=corpus.total_files,
        total_lines=corpus.total_lines,
        source_globs=globs,
        source_files=src_files,
        source_lines=src_lines,
        ratio=ratio,
        source_unmatched=unmatched,
    )
