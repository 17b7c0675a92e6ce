import pytest

from distcoref.kb import KBSnapshot


@pytest.fixture
def nixon_kb():
    return KBSnapshot.build(
        redirects=[("Dick Nixon", "Richard Nixon")],
        pages=[
            ("Richard Nixon", "Richard Nixon president watergate scandal resigned watergate"),
            ("Football Coach", "football coach team season league"),
        ],
    )


NIXON_TEXTS = [
    ("n1", "Dick Nixon spoke again about watergate on Monday"),
    ("n2", "Critics said Richard Nixon never escaped watergate"),
    ("f1", "The coach praised Tom Brady after the football season"),
]


@pytest.fixture
def nixon_docs():
    from distcoref.corpus import Document

    docs = []
    for doc_id, text in NIXON_TEXTS:
        name = next(n for n in ("Dick Nixon", "Richard Nixon", "Tom Brady") if n in text)
        start = text.index(name)
        docs.append(Document(doc_id, text, ((start, start + len(name)),)))
    return docs


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when == "call" and "test_acceptance.py::test_criterion_" in rep.nodeid:
                detail = dict(rep.user_properties).get("detail", "")
                name = rep.nodeid.split("::")[-1]
                rows.append((name, "PASS" if outcome == "passed" else "FAIL", detail))
    if rows:
        terminalreporter.section("acceptance criteria")
        for name, verdict, detail in sorted(rows):
            terminalreporter.write_line(f"{verdict}  {name}  {detail}")
