"""Combine per-model falsehood probabilities into one score.

``dapa`` weights each model by the mean reliability of the information it
consumed for *this* document, so weights move from instance to instance and
over time. ``bmacc``, ``max_conf`` and ``av`` are the fixed baselines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .base_models import BaseModelDescriptor, Prediction

STRATEGIES = ("dapa", "bmacc", "max", "av")


@dataclass(frozen=True)
class ModelShare:
    model_id: str
    prob_false: float
    weight: float
    share: float


@dataclass(frozen=True)
class AggregateResult:
    prob_false: float
    strategy: str
    per_model: tuple[ModelShare, ...]
    degraded: bool = False
    tie: bool = False

    def share_of(self, model_id: str) -> float:
        for m in self.per_model:
            if m.model_id == model_id:
                return m.share
        raise KeyError(model_id)


def _check(predictions: Sequence[Prediction]) -> None:
    if not predictions:
        raise ValueError("no predictions to aggregate")
    ids = [p.model_id for p in predictions]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate model ids in {ids}")


def _weighted(predictions: Sequence[Prediction], weights: Sequence[float], strategy: str) -> AggregateResult:
    for w in weights:
        if not (w >= 0 and math.isfinite(w)):
            raise ValueError(f"{strategy}: weights must be finite and nonnegative, got {w!r}")
    total = math.fsum(weights)
    degraded = False
    if total <= 0:
        weights = [1.0] * len(predictions)
        total = float(len(predictions))
        degraded = True
    prob = math.fsum(w * p.prob_false for w, p in zip(weights, predictions)) / total
    # guard against rounding just outside the convex hull
    lo = min(p.prob_false for p in predictions)
    hi = max(p.prob_false for p in predictions)
    prob = min(hi, max(lo, prob))
    per_model = tuple(
        ModelShare(p.model_id, p.prob_false, float(w), w / total) for p, w in zip(predictions, weights)
    )
    return AggregateResult(prob, strategy, per_model, degraded=degraded)


def dapa(predictions: Sequence[Prediction]) -> AggregateResult:
    """Reliability-weighted mean; falls back to ``av`` (flagged) when every reliability is 0."""
    _check(predictions)
    return _weighted(predictions, [p.model_reliability for p in predictions], "dapa")


def bmacc(
    predictions: Sequence[Prediction],
    descriptors: Sequence[BaseModelDescriptor] | Mapping[str, BaseModelDescriptor],
) -> AggregateResult:
    _check(predictions)
    if not isinstance(descriptors, Mapping):
        descriptors = {d.model_id: d for d in descriptors}
    weights = []
    for p in predictions:
        d = descriptors.get(p.model_id)
        if d is None or d.validation_score is None:
            raise ValueError(f"bmacc: no validation score for {p.model_id!r}")
        weights.append(d.validation_score)
    return _weighted(predictions, weights, "bmacc")


def av(predictions: Sequence[Prediction]) -> AggregateResult:
    _check(predictions)
    return _weighted(predictions, [1.0] * len(predictions), "av")


def max_conf(predictions: Sequence[Prediction]) -> AggregateResult:
    """The most extreme probability. Ties go to the lexicographically first model id."""
    _check(predictions)
    best = max(abs(p.prob_false - 0.5) for p in predictions)
    # |0.2-0.5| and |0.8-0.5| differ in the last bit; treat them as tied
    winners = sorted(p.model_id for p in predictions if best - abs(p.prob_false - 0.5) <= 1e-12)
    chosen = winners[0]
    per_model = tuple(
        ModelShare(p.model_id, p.prob_false, float(p.model_id == chosen), float(p.model_id == chosen))
        for p in predictions
    )
    prob = next(p.prob_false for p in predictions if p.model_id == chosen)
    return AggregateResult(prob, "max", per_model, tie=len(winners) > 1)


def aggregate(
    strategy: str,
    predictions: Sequence[Prediction],
    descriptors: Sequence[BaseModelDescriptor] | None = None,
) -> AggregateResult:
    if strategy == "dapa":
        return dapa(predictions)
    if strategy == "bmacc":
        if descriptors is None:
            raise ValueError("bmacc needs model descriptors")
        return bmacc(predictions, descriptors)
    if strategy == "max":
        return max_conf(predictions)
    if strategy == "av":
        return av(predictions)
    raise ValueError(f"unknown aggregator {strategy!r}; choose from {', '.join(STRATEGIES)}")
