"""Train base models and score documents end to end (enrich, predict, aggregate, explain)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .aggregator import STRATEGIES, AggregateResult, aggregate
from .base_models import DEFAULT_MODELS, BaseModel, ModelBundle, Prediction, create
from .enricher import EnrichedDocument, ReliabilityTable, enrich, observe_time
from .explainer import Explanation, explain
from .metrics import f1_score
from .osmn import Corpus, items_for_document


@dataclass
class TrainingContext:
    """What the models saw in training; drives ``publisher_type`` and label exposure."""

    publisher_ids: frozenset[str]
    user_ids: frozenset[str]
    known_labels: dict[str, int]

    @classmethod
    def from_docs(cls, corpus: Corpus, doc_ids: Iterable[str], observe_hours: float | None = None):
        doc_ids = list(doc_ids)
        users = set()
        for d in doc_ids:
            users.update(it.user_id for it in items_for_document(corpus, d, observe_time(corpus, d, observe_hours)))
        return cls(
            frozenset(corpus.documents[d].publisher_id for d in doc_ids),
            frozenset(users),
            {d: corpus.documents[d].label for d in doc_ids},
        )


@dataclass
class ScoredDocument:
    doc_id: str
    enriched: EnrichedDocument
    predictions: list[Prediction]
    aggregates: dict[str, AggregateResult]


def enrich_many(
    corpus: Corpus,
    doc_ids: Sequence[str],
    context: TrainingContext,
    observe_hours: float | None = None,
    table: ReliabilityTable | None = None,
) -> list[EnrichedDocument]:
    return [
        enrich(
            corpus,
            d,
            observe_time(corpus, d, observe_hours),
            training_publisher_ids=context.publisher_ids,
            training_user_ids=context.user_ids,
            known_labels=context.known_labels,
            table=table,
        )
        for d in doc_ids
    ]


def train_models(
    corpus: Corpus,
    train_ids: Sequence[str],
    val_ids: Sequence[str] = (),
    model_ids: Sequence[str] = DEFAULT_MODELS,
    table: ReliabilityTable | None = None,
    threshold: float = 0.5,
) -> tuple[list[BaseModel], TrainingContext]:
    """Fit every model on ``train_ids`` (fully observed); F1 on ``val_ids`` becomes ``validation_score``."""
    context = TrainingContext.from_docs(corpus, train_ids)
    train_docs = enrich_many(corpus, train_ids, context, None, table)
    labels = [corpus.documents[d].label for d in train_ids]
    if any(y is None for y in labels):
        raise ValueError("training documents must be labeled")
    models = [m.train(train_docs, labels) for m in create(model_ids)]
    if val_ids:
        val_docs = enrich_many(corpus, val_ids, context, None, table)
        y_val = [corpus.documents[d].label for d in val_ids]
        for m in models:
            preds = [int(m.predict(d).prob_false >= threshold) for d in val_docs]
            m.validation_score = f1_score(y_val, preds)
    return models, context


def score(
    models: Sequence[BaseModel],
    docs: Sequence[EnrichedDocument],
    strategies: Sequence[str] = STRATEGIES,
) -> list[ScoredDocument]:
    descriptors = [m.descriptor for m in models]
    need_bmacc = "bmacc" in strategies
    if need_bmacc and any(d.validation_score is None for d in descriptors):
        raise ValueError("bmacc needs validation scores on every model")
    out = []
    for doc in docs:
        preds = [m.predict(doc) for m in models]
        aggs = {s: aggregate(s, preds, descriptors) for s in strategies}
        out.append(ScoredDocument(doc.doc_id, doc, preds, aggs))
    return out


def predict_corpus(
    corpus: Corpus,
    bundle: ModelBundle,
    doc_ids: Sequence[str] | None = None,
    at_hours: float | None = None,
    strategy: str = "dapa",
    with_explanation: bool = False,
) -> list[dict]:
    """One JSON-ready record per document, as written by ``mapx predict``."""
    table = ReliabilityTable(bundle.reliability_table) if bundle.reliability_table else None
    context = TrainingContext(bundle.training_publisher_ids, bundle.training_user_ids, {})
    doc_ids = list(corpus.documents) if doc_ids is None else list(doc_ids)
    docs = enrich_many(corpus, doc_ids, context, at_hours, table)
    records = []
    for sd in score(bundle.models, docs, [strategy] if not with_explanation else [strategy, "dapa"]):
        agg = sd.aggregates[strategy]
        rec = {
            "doc_id": sd.doc_id,
            "observe_at": None if math.isinf(sd.enriched.observe_at) else sd.enriched.observe_at,
            "prob_false": agg.prob_false,
            "strategy": strategy,
            "degraded": agg.degraded,
            "per_model": [
                {
                    "model_id": m.model_id,
                    "prob_false": m.prob_false,
                    "reliability": p.model_reliability,
                    "weight": m.weight,
                    "share": m.share,
                }
                for m, p in zip(agg.per_model, sd.predictions)
            ],
        }
        if with_explanation:
            rec["explanation"] = explain_scored(sd, bundle.models).to_dict()
        records.append(rec)
    return records


def explain_scored(sd: ScoredDocument, models: Sequence[BaseModel]) -> Explanation:
    return explain(sd.predictions, sd.enriched, sd.aggregates["dapa"], models)
