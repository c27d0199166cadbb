import pytest

from mapx.dataset_io import WORKED_EXAMPLE, SynthConfig, generate_synthetic
from mapx.osmn import Document, Item, build_corpus

HOUR = 3600.0
T0 = 1_700_000_000


@pytest.fixture(scope="session")
def worked_example():
    return WORKED_EXAMPLE


@pytest.fixture(scope="session")
def small_synth():
    return generate_synthetic(SynthConfig(n_documents=200, n_publishers=20, n_users=80, seed=3))


@pytest.fixture(scope="session")
def tiny_corpus():
    """Three documents by one publisher; four items by two users on d1."""
    docs = [
        Document("d1", "p1", "alpha beta gamma", T0, 1),
        Document("d2", "p1", "delta", T0 + 10, 0),
        Document("d3", "p1", "", T0 + 20, None),
    ]
    items = [
        Item("i1", "d1", "u1", T0 + 1 * HOUR, "post"),
        Item("i2", "d1", "u2", T0 + 5 * HOUR, "share"),
        Item("i3", "d1", "u1", T0 + 200 * HOUR, "comment", parent_item_id="i1"),
        Item("i4", "d2", "u2", T0 + 10 + 3 * HOUR, "like"),
    ]
    return build_corpus(docs, items)


def make_doc(doc_id="x", tokens=None, publisher="p1", users=None, rel=(0.5, 0.5, 0.5)):
    """Hand-built EnrichedDocument; ``users`` maps user id to item count."""
    from mapx.enricher import EnrichedDocument, Information, InformationKind, ReliabilityFactor

    users = users or {}
    infos = (
        Information(InformationKind.WORDS, {"tokens": dict(tokens or {})}, (ReliabilityFactor("word_count", 0, rel[0]),)),
        Information(
            InformationKind.PUBLISHER_HISTORY,
            {"publisher_id": publisher, "history": []},
            (ReliabilityFactor("document_count", 0, rel[1]),),
        ),
        Information(
            InformationKind.USER_HISTORY,
            {"users": {u: {"items": k, "known": True} for u, k in users.items()}},
            (ReliabilityFactor("item_count", 0, rel[2]),),
        ),
    )
    return EnrichedDocument(doc_id, float("inf"), infos)


ACCEPTANCE_LOG: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)
