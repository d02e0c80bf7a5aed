from __future__ import annotations

import shutil
from pathlib import Path

import pytest

import corpus_factory

FIXTURES = Path(__file__).parent / "fixtures"

_acceptance: dict[str, tuple[str, str]] = {}


@pytest.fixture
def game_root(tmp_path: Path) -> Path:
    """Writable copy of the hand-written game-project corpus."""
    dest = tmp_path / "game"
    shutil.copytree(FIXTURES / "game", dest)
    return dest


@pytest.fixture(scope="session")
def scale_root(tmp_path_factory: pytest.TempPathFactory) -> Path:
    return corpus_factory.write_scale_corpus(tmp_path_factory.mktemp("scale"))


def write_corpus(root: Path, constitution: str = "# Constitution\n", agents=None, docs=None) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    (root / "CONSTITUTION.md").write_text(constitution, encoding="utf-8")
    (root / "agents").mkdir(exist_ok=True)
    (root / "context").mkdir(exist_ok=True)
    for name, text in (agents or {}).items():
        (root / "agents" / name).write_text(text, encoding="utf-8")
    for name, text in (docs or {}).items():
        (root / "context" / name).write_text(text, encoding="utf-8")
    return root


@pytest.fixture
def make_corpus(tmp_path: Path):
    counter = iter(range(10_000))

    def make(**kwargs) -> Path:
        return write_corpus(tmp_path / f"corpus{next(counter)}", **kwargs)

    return make


def pytest_runtest_logreport(report: pytest.TestReport) -> None:
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        doc = dict(report.user_properties).get("criterion", name)
        _acceptance[name] = (report.outcome, doc)


def pytest_terminal_summary(terminalreporter) -> None:
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for outcome, label in sorted(_acceptance.values(), key=lambda v: v[1]):
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{mark}] {label}")
