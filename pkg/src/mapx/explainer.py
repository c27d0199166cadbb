"""Four-tier explanation of an aggregated prediction.

Tier 1 names the most reliable base model and its share of the aggregate,
tier 2 the network (content or context) that model leaned on most, tier 3
its most reliable information, tier 4 that information's reliability
factors. Ties at any tier go to the lexicographically first identifier and
are flagged.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Any, Sequence

from .aggregator import AggregateResult
from .base_models import REGISTRY, BaseModel, BaseModelDescriptor, Prediction
from .enricher import EnrichedDocument, InformationKind


@dataclass(frozen=True)
class Tier1:
    model_id: str
    share: float


@dataclass(frozen=True)
class Tier2:
    network: str
    avg_reliability: float


@dataclass(frozen=True)
class Tier3:
    information: str
    reliability: float


@dataclass(frozen=True)
class Tier4Factor:
    factor: str
    value: Any
    score: float


@dataclass(frozen=True)
class Explanation:
    doc_id: str
    observe_at: float
    tier1: Tier1
    tier2: Tier2
    tier3: Tier3
    tier4: tuple[Tier4Factor, ...]
    ties: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["observe_at"] = None if math.isinf(self.observe_at) else self.observe_at
        d["tier4"] = [_jsonable_factor(f) for f in d["tier4"]]
        d["ties"] = list(self.ties)
        return d


def _jsonable_factor(f: dict) -> dict:
    v = f["value"]
    if isinstance(v, float) and math.isinf(v):
        v = None
    return {**f, "value": v}


def _argmax(scores: dict[str, float]) -> tuple[str, bool]:
    best = max(scores.values())
    winners = sorted(k for k, v in scores.items() if v == best)
    return winners[0], len(winners) > 1


def explain(
    predictions: Sequence[Prediction],
    enriched_doc: EnrichedDocument,
    aggregate: AggregateResult,
    consumes: dict[str, frozenset[InformationKind]] | Sequence[BaseModel | BaseModelDescriptor] | None = None,
) -> Explanation:
    """Explain ``aggregate`` for ``enriched_doc``.

    ``consumes`` maps each model id to the information kinds it used; base
    models or their descriptors may be passed instead. Defaults to the
    registered reference models.
    """
    if not predictions:
        raise ValueError("cannot explain an empty prediction set")
    if consumes is None:
        consumes = {mid: cls.consumes for mid, cls in REGISTRY.items()}
    elif not isinstance(consumes, dict):
        consumes = {m.model_id: frozenset(m.consumes) for m in consumes}
    ties = []

    model_id, tied = _argmax({p.model_id: p.model_reliability for p in predictions})
    if tied:
        ties.append("tier1")
    tier1 = Tier1(model_id, aggregate.share_of(model_id))

    infos = [enriched_doc.get(k) for k in sorted(consumes[model_id], key=lambda k: k.value)]
    by_net: dict[str, list[float]] = {}
    for info in infos:
        by_net.setdefault(info.kind.network, []).append(info.reliability)
    network, tied = _argmax({n: sum(r) / len(r) for n, r in by_net.items()})
    if tied:
        ties.append("tier2")
    tier2 = Tier2(network, sum(by_net[network]) / len(by_net[network]))

    kind, tied = _argmax({i.kind.value: i.reliability for i in infos})
    if tied:
        ties.append("tier3")
    top = enriched_doc.get(InformationKind(kind))
    tier3 = Tier3(kind, top.reliability)
    tier4 = tuple(Tier4Factor(f.name, f.value, f.score) for f in top.factors)
    return Explanation(enriched_doc.doc_id, enriched_doc.observe_at, tier1, tier2, tier3, tier4, tuple(ties))


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.4g}"
    return str(v)


def render(explanation: Explanation, format: str = "json") -> str:
    if format == "json":
        return json.dumps(explanation.to_dict(), sort_keys=True)
    if format != "text":
        raise ValueError(f"unknown format {format!r}")
    e = explanation
    factors = ", ".join(f"{f.factor}={_fmt_value(f.value)} (score {f.score:.2f})" for f in e.tier4)
    lines = [
        f"Document {e.doc_id}",
        f"Tier 1 (model): {e.tier1.model_id} contributed {e.tier1.share:.0%} of the final prediction",
        f"Tier 2 (network): the {e.tier2.network} network contributed most "
        f"(average reliability {e.tier2.avg_reliability:.2f})",
        f"Tier 3 (information): {e.tier3.information} with reliability {e.tier3.reliability:.2f}",
        f"Tier 4 (reliability factors): {factors}",
    ]
    if e.ties:
        lines.append(f"Ties broken lexicographically at: {', '.join(e.ties)}")
    return "\n".join(lines) + "\n"
