"""Turn a document into reliability-scored information bundles.

Each information kind (words, publisher history, user history) carries the
features one family of base models needs, plus a reliability in [0, 1]
equal to the mean of its reliability factor scores. Factor scores come from
a piecewise-constant lookup table; :data:`DEFAULT_TABLE` holds the stock
bins and :func:`load_table` reads an override from JSON.
"""

from __future__ import annotations

import json
import math
import re
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .osmn import Corpus, CorpusError, Item, items_for_document, publisher_history

SECONDS_PER_DAY = 86400.0
SECONDS_PER_HOUR = 3600.0

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


class InformationKind(str, Enum):
    WORDS = "words"
    PUBLISHER_HISTORY = "publisher_history"
    USER_HISTORY = "user_history"

    @property
    def network(self) -> str:
        return "context" if self is InformationKind.USER_HISTORY else "content"


FACTORS_BY_KIND = {
    InformationKind.WORDS: ("word_count",),
    InformationKind.PUBLISHER_HISTORY: ("publisher_type", "document_count"),
    InformationKind.USER_HISTORY: ("item_count", "item_per_user", "document_age"),
}

# Numeric factors: (lower_edge, score) pairs; a value v scores the entry with
# the largest lower_edge <= v. Integer-valued factors use the integer ranges
# as given; fractional factors close the gaps between listed ranges.
DEFAULT_TABLE: dict[str, Any] = {
    "word_count": [[0, 0.0], [26, 0.4], [101, 0.6], [301, 0.8], [601, 0.6]],
    "publisher_type": {"new": 0.1, "existing": 1.0},
    "document_count": [[0, 0.1], [2, 0.4], [11, 0.5], [51, 1.0]],
    "item_count": [[0, 0.1], [2, 0.4], [11, 0.5], [51, 1.0]],
    "item_per_user": [[0, 0.1], [2, 0.2], [4, 0.5], [9, 1.0]],
    "document_age": [[0, 0.01], [0.085, 0.1], [1.5, 0.4], [7.5, 1.0]],
}

FACTOR_NAMES = tuple(DEFAULT_TABLE)


class ReliabilityTable:
    """Validated, immutable form of a bin table."""

    def __init__(self, overrides: Mapping[str, Any] | None = None):
        overrides = DEFAULT_TABLE if overrides is None else overrides
        unknown = set(overrides) - set(FACTOR_NAMES)
        if unknown:
            raise ValueError(f"unknown reliability factors: {sorted(unknown)}")
        merged = {**DEFAULT_TABLE, **overrides}
        self._numeric: dict[str, tuple[tuple[float, ...], tuple[float, ...]]] = {}
        self._categorical: dict[str, dict[str, float]] = {}
        for name, bins in merged.items():
            if isinstance(bins, Mapping):
                scores = {str(k): float(v) for k, v in bins.items()}
                _check_scores(name, scores.values())
                self._categorical[name] = scores
                continue
            edges = tuple(float(b[0]) for b in bins)
            scores = tuple(float(b[1]) for b in bins)
            if not edges or edges[0] != 0 or any(a >= b for a, b in zip(edges, edges[1:])):
                raise ValueError(f"{name}: bin edges must start at 0 and strictly increase")
            _check_scores(name, scores)
            self._numeric[name] = (edges, scores)

    def lookup(self, factor_name: str, value: Any) -> float:
        if factor_name in self._categorical:
            try:
                return self._categorical[factor_name][value]
            except KeyError:
                raise ValueError(f"{factor_name}: unknown category {value!r}") from None
        if factor_name not in self._numeric:
            raise ValueError(f"unknown reliability factor {factor_name!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{factor_name}: expected a number, got {value!r}")
        if math.isnan(value) or value < 0:
            raise ValueError(f"{factor_name}: value must be nonnegative, got {value!r}")
        edges, scores = self._numeric[factor_name]
        return scores[bisect_right(edges, value) - 1]

    def bin_index(self, factor_name: str, value: float) -> int:
        """Position of ``value``'s bin, 0 for the bottom bin."""
        self.lookup(factor_name, value)
        edges, _ = self._numeric[factor_name]
        return bisect_right(edges, value) - 1

    def n_bins(self, factor_name: str) -> int:
        return len(self._numeric[factor_name][0])

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for name in FACTOR_NAMES:
            if name in self._categorical:
                out[name] = dict(self._categorical[name])
            else:
                edges, scores = self._numeric[name]
                out[name] = [[_num(e), s] for e, s in zip(edges, scores)]
        return out

    def __eq__(self, other):
        return isinstance(other, ReliabilityTable) and self.to_dict() == other.to_dict()


def _num(x: float):
    return int(x) if float(x).is_integer() else x


def _check_scores(name, scores):
    for s in scores:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"{name}: score {s} outside [0, 1]")


def load_table(path: str | Path) -> ReliabilityTable:
    with open(path, encoding="utf-8") as fh:
        return ReliabilityTable(json.load(fh))


DEFAULT = ReliabilityTable()


def reliability_lookup(factor_name: str, value: Any, table: ReliabilityTable | None = None) -> float:
    """Score ``value`` for ``factor_name``.

    >>> reliability_lookup("word_count", 542)
    0.8
    >>> reliability_lookup("publisher_type", "new")
    0.1
    """
    return (table or DEFAULT).lookup(factor_name, value)


def tokenize(text: str) -> list[str]:
    """Lower-case alphanumeric runs; shared by word counting and the content model."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


@dataclass(frozen=True)
class ReliabilityFactor:
    name: str
    value: Any
    score: float


@dataclass(frozen=True)
class Information:
    kind: InformationKind
    payload: Mapping[str, Any]
    factors: tuple[ReliabilityFactor, ...]
    reliability: float = field(init=False)

    def __post_init__(self):
        scores = [f.score for f in self.factors]
        object.__setattr__(self, "reliability", sum(scores) / len(scores) if scores else 0.0)


@dataclass(frozen=True)
class EnrichedDocument:
    doc_id: str
    observe_at: float
    informations: tuple[Information, ...]

    def __post_init__(self):
        kinds = [i.kind for i in self.informations]
        if sorted(kinds) != sorted(InformationKind):
            raise ValueError(f"{self.doc_id}: need exactly one information per kind, got {kinds}")

    def get(self, kind: InformationKind) -> Information:
        for info in self.informations:
            if info.kind is kind:
                return info
        raise KeyError(kind)


def _information(kind, payload, values: Sequence[tuple[str, Any]], table) -> Information:
    factors = tuple(ReliabilityFactor(n, v, table.lookup(n, v)) for n, v in values)
    return Information(kind, payload, factors)


def peak_items_per_user(items: Sequence[Item]) -> float:
    """Highest items/distinct-users ratio reached so far in a time-sorted item list.

    The plain ratio dips whenever a new user joins; the running peak keeps
    the factor (and so user_history reliability) non-decreasing in time.
    Items sharing a timestamp arrive together.
    """
    seen: set[str] = set()
    peak = 0.0
    for k, it in enumerate(items):
        seen.add(it.user_id)
        if k + 1 == len(items) or items[k + 1].timestamp != it.timestamp:
            peak = max(peak, (k + 1) / len(seen))
    return peak


def enrich(
    corpus: Corpus,
    doc_id: str,
    observe_at: float = math.inf,
    training_publisher_ids: Iterable[str] = (),
    training_user_ids: Iterable[str] = (),
    known_labels: Mapping[str, int] | None = None,
    table: ReliabilityTable | None = None,
) -> EnrichedDocument:
    """Build the enriched form of one document as seen at ``observe_at``.

    ``training_publisher_ids`` decides ``publisher_type``; ``known_labels``
    limits which history labels are exposed in the payload so that
    cross-validation folds never see test labels.
    """
    table = table or DEFAULT
    doc = corpus.document(doc_id)
    if observe_at < doc.publish_time:
        raise CorpusError(f"document {doc_id!r} observed before publication")
    known_labels = known_labels or {}
    training_publisher_ids = frozenset(training_publisher_ids)
    training_user_ids = frozenset(training_user_ids)

    tokens = Counter(tokenize(doc.text))
    words = _information(
        InformationKind.WORDS,
        {"tokens": tokens},
        [("word_count", sum(tokens.values()))],
        table,
    )

    history = publisher_history(corpus, doc.publisher_id, exclude_doc=doc_id)
    pub_type = "existing" if doc.publisher_id in training_publisher_ids else "new"
    publisher = _information(
        InformationKind.PUBLISHER_HISTORY,
        {
            "publisher_id": doc.publisher_id,
            "history": [(d.doc_id, known_labels.get(d.doc_id)) for d in history],
        },
        [("publisher_type", pub_type), ("document_count", len(history))],
        table,
    )

    visible = items_for_document(corpus, doc_id, observe_at)
    per_user = Counter(it.user_id for it in visible)
    item_count = len(visible)
    item_per_user = peak_items_per_user(visible)
    age_days = (observe_at - doc.publish_time) / SECONDS_PER_DAY
    users = _information(
        InformationKind.USER_HISTORY,
        {
            "users": {
                u: {"items": n, "known": u in training_user_ids} for u, n in sorted(per_user.items())
            }
        },
        [("item_count", item_count), ("item_per_user", item_per_user), ("document_age", age_days)],
        table,
    )
    return EnrichedDocument(doc_id, observe_at, (words, publisher, users))


def enrich_batch(
    corpus: Corpus,
    doc_ids: Iterable[str],
    observe_at: float | Mapping[str, float] = math.inf,
    **kwargs,
) -> list[EnrichedDocument]:
    """Element-wise :func:`enrich`. ``observe_at`` may be a per-document mapping."""
    out = []
    for d in doc_ids:
        t = observe_at[d] if isinstance(observe_at, Mapping) else observe_at
        out.append(enrich(corpus, d, t, **kwargs))
    return out


def observe_time(corpus: Corpus, doc_id: str, hours: float | None) -> float:
    """Absolute observation time ``hours`` after publication; ``None`` means everything."""
    if hours is None or math.isinf(hours):
        return math.inf
    if hours < 0:
        raise ValueError(f"negative observation offset {hours}")
    return corpus.document(doc_id).publish_time + hours * SECONDS_PER_HOUR
