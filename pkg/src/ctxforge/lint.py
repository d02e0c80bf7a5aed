"""Constitution checks: size budget, broken doc links, unknown trigger agents, orphan docs."""

from __future__ import annotations

from pathlib import Path

from .corpus import ContextCorpus, Diagnostic, iter_doc_links
from .index import doc_keyword_set
from .tokens import token_matches, unique_tokens


def lint_constitution(corpus: ContextCorpus) -> list[Diagnostic]:
    const = corpus.constitution
    diags: list[Diagnostic] = list(corpus.diagnostics)

    if const.line_count > const.budget:
        diags.append(
            Diagnostic(
                "warning",
                "budget-exceeded",
                f"constitution has {const.line_count} lines, budget is {const.budget}",
                const.path,
            )
        )

    root = Path(corpus.root)
    for lineno, target in iter_doc_links(const.text, const.path):
        if not (root / target).is_file():
            diags.append(Diagnostic("error", "broken-link", f"link target does not exist: {target}", const.path, lineno))

    agents = corpus.agent_names()
    for rule in const.trigger_rules:
        if rule.agent not in agents:
            diags.append(
                Diagnostic(
                    "error",
                    "unknown-agent",
                    f"trigger rule names unknown agent {rule.agent!r}",
                    const.path,
                    source_row=rule.source_row,
                )
            )

    linked = set(const.doc_links)
    const_tokens = unique_tokens(const.text)
    for doc in corpus.docs:
        if doc.path in linked:
            continue
        keywords = doc_keyword_set(doc)
        if not any(token_matches(t, w) for t in const_tokens for w in keywords):
            diags.append(
                Diagnostic(
                    "info",
                    "orphan-doc",
                    f"{doc.path} is neither linked from nor keyword-related to the constitution",
                    doc.path,
                )
            )
    return diags


def has_errors(diagnostics: list[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diagnostics)
