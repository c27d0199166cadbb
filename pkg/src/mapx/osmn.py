"""Content and context networks of an online social media network.

The content network links publishers to the documents they publish; the
context network holds users and the items (posts, shares, likes, comments)
they create around those documents. Publishers and users are never supplied
directly, they are synthesized from the foreign keys on documents and items.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

ITEM_KINDS = ("post", "share", "like", "comment")

TRUE_NEWS = 0
FALSE_NEWS = 1


class CorpusError(ValueError):
    """Raised when documents/items violate identity or referential integrity."""


@dataclass(frozen=True)
class Document:
    doc_id: str
    publisher_id: str
    text: str
    publish_time: float
    label: int | None = None

    def __post_init__(self):
        if self.label not in (None, TRUE_NEWS, FALSE_NEWS):
            raise CorpusError(f"document {self.doc_id!r}: label must be 0, 1 or absent, got {self.label!r}")


@dataclass(frozen=True)
class Item:
    item_id: str
    doc_id: str
    user_id: str
    timestamp: float
    kind: str = "post"
    parent_item_id: str | None = None
    text: str | None = None

    def __post_init__(self):
        if self.kind not in ITEM_KINDS:
            raise CorpusError(f"item {self.item_id!r}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class Publisher:
    publisher_id: str
    document_ids: tuple[str, ...]


@dataclass(frozen=True)
class User:
    user_id: str
    item_ids: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class Corpus:
    """Immutable view over both networks.

    Use :func:`build_corpus` rather than the constructor; it validates the
    inputs and builds the adjacency indexes.
    """

    publishers: Mapping[str, Publisher]
    documents: Mapping[str, Document]
    users: Mapping[str, User]
    items: Mapping[str, Item]
    _doc_items: Mapping[str, tuple[Item, ...]] = field(repr=False)
    _doc_item_times: Mapping[str, tuple[float, ...]] = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, Corpus):
            return NotImplemented
        return (
            dict(self.documents) == dict(other.documents)
            and dict(self.items) == dict(other.items)
        )

    def __len__(self):
        return len(self.documents)

    @property
    def doc_ids(self) -> list[str]:
        return list(self.documents)

    def labeled_doc_ids(self) -> list[str]:
        return [d.doc_id for d in self.documents.values() if d.label is not None]

    def document(self, doc_id: str) -> Document:
        try:
            return self.documents[doc_id]
        except KeyError:
            raise CorpusError(f"unknown document {doc_id!r}") from None


def build_corpus(documents: Iterable[Document], items: Iterable[Item]) -> Corpus:
    """Validate documents and items and assemble a :class:`Corpus`.

    Collections are keyed in identifier order so that any permutation of the
    inputs yields an identical corpus. Items on a document are ordered by
    ``(timestamp, item_id)``.
    """
    docs: dict[str, Document] = {}
    for d in documents:
        if d.doc_id in docs:
            raise CorpusError(f"duplicate document id {d.doc_id!r}")
        if not math.isfinite(d.publish_time):
            raise CorpusError(f"document {d.doc_id!r}: publish_time must be finite")
        docs[d.doc_id] = d

    its: dict[str, Item] = {}
    for it in items:
        if it.item_id in its:
            raise CorpusError(f"duplicate item id {it.item_id!r}")
        if it.doc_id not in docs:
            raise CorpusError(f"item {it.item_id!r} references unknown document {it.doc_id!r}")
        if it.timestamp < docs[it.doc_id].publish_time:
            raise CorpusError(f"item {it.item_id!r} predates its document {it.doc_id!r}")
        its[it.item_id] = it

    for it in its.values():
        if it.parent_item_id is None:
            continue
        parent = its.get(it.parent_item_id)
        if parent is None:
            raise CorpusError(f"item {it.item_id!r} references unknown parent {it.parent_item_id!r}")
        if parent.doc_id != it.doc_id:
            raise CorpusError(f"item {it.item_id!r} and its parent belong to different documents")

    docs = {k: docs[k] for k in sorted(docs)}
    its = {k: its[k] for k in sorted(its)}

    pub_docs: dict[str, list[str]] = {}
    for d in docs.values():
        pub_docs.setdefault(d.publisher_id, []).append(d.doc_id)
    user_items: dict[str, list[str]] = {}
    doc_items: dict[str, list[Item]] = {k: [] for k in docs}
    for it in its.values():
        user_items.setdefault(it.user_id, []).append(it.item_id)
        doc_items[it.doc_id].append(it)

    for lst in doc_items.values():
        lst.sort(key=lambda it: (it.timestamp, it.item_id))

    publishers = {p: Publisher(p, tuple(ids)) for p, ids in sorted(pub_docs.items())}
    users = {u: User(u, tuple(ids)) for u, ids in sorted(user_items.items())}
    frozen_items = {k: tuple(v) for k, v in doc_items.items()}
    return Corpus(
        publishers=MappingProxyType(publishers),
        documents=MappingProxyType(docs),
        users=MappingProxyType(users),
        items=MappingProxyType(its),
        _doc_items=MappingProxyType(frozen_items),
        _doc_item_times=MappingProxyType({k: tuple(i.timestamp for i in v) for k, v in frozen_items.items()}),
    )


def items_for_document(corpus: Corpus, doc_id: str, observe_at: float = math.inf) -> list[Item]:
    """Items of ``doc_id`` visible at ``observe_at`` (timestamp <= observe_at), oldest first."""
    if doc_id not in corpus.documents:
        raise CorpusError(f"unknown document {doc_id!r}")
    n = bisect_right(corpus._doc_item_times[doc_id], observe_at)
    return list(corpus._doc_items[doc_id][:n])


def publisher_history(corpus: Corpus, publisher_id: str, exclude_doc: str | None = None) -> list[Document]:
    try:
        pub = corpus.publishers[publisher_id]
    except KeyError:
        raise CorpusError(f"unknown publisher {publisher_id!r}") from None
    return [corpus.documents[d] for d in pub.document_ids if d != exclude_doc]


def check_integrity(corpus: Corpus) -> None:
    """Full scan of every cross reference; raises :class:`CorpusError` on the first violation."""
    for pid, pub in corpus.publishers.items():
        for d in pub.document_ids:
            if corpus.documents[d].publisher_id != pid:
                raise CorpusError(f"publisher {pid!r} lists foreign document {d!r}")
    for d in corpus.documents.values():
        if d.doc_id not in corpus.publishers[d.publisher_id].document_ids:
            raise CorpusError(f"document {d.doc_id!r} missing from its publisher")
    for uid, user in corpus.users.items():
        for i in user.item_ids:
            if corpus.items[i].user_id != uid:
                raise CorpusError(f"user {uid!r} lists foreign item {i!r}")
    for it in corpus.items.values():
        if it.doc_id not in corpus.documents or it.item_id not in corpus.users[it.user_id].item_ids:
            raise CorpusError(f"item {it.item_id!r} is dangling")
        if it.parent_item_id is not None and corpus.items[it.parent_item_id].doc_id != it.doc_id:
            raise CorpusError(f"item {it.item_id!r} has a parent on another document")
