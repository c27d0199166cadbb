"""Cross-validated evaluation, reliability-degradation and temporal experiments.

Folds: a seeded permutation of the labeled documents is cut into ``folds``
equal chunks. Fold ``k`` tests on the ``n_test`` chunks starting at ``k``,
validates on the next ``n_val`` chunks and trains on the rest, so the
default 10 folds with a 70/10/20 split use seven chunks for training, one
for validation (it sets the BMAcc weights) and two for testing.

Systems are the single base models plus ``mapx-<aggregator>`` for each
aggregator.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .aggregator import STRATEGIES
from .base_models import DEFAULT_MODELS, BaseModel
from .enricher import ReliabilityTable
from .metrics import accuracy, f1_score, threshold
from .osmn import Corpus
from .pipeline import ScoredDocument, TrainingContext, enrich_many, score, train_models

DEGRADATION_FACTORS = ("publisher_type", "item_per_user", "item_count")
DEFAULT_SNAPSHOTS = (0.0, 1.0, 6.0, 24.0, 72.0, 168.0)


class EvaluationError(ValueError):
    pass


@dataclass
class EvalConfig:
    folds: int = 10
    split: tuple[float, float, float] = (0.70, 0.10, 0.20)
    seed: int = 0
    aggregators: tuple[str, ...] = STRATEGIES
    models: tuple[str, ...] = DEFAULT_MODELS
    threshold: float = 0.5
    observe_hours: float | None = None

    def validate(self) -> None:
        if self.folds < 3:
            raise EvaluationError("need at least 3 folds")
        if len(self.split) != 3 or any(f < 0 for f in self.split) or not math.isclose(sum(self.split), 1.0):
            raise EvaluationError(f"split fractions must be nonnegative and sum to 1, got {self.split}")
        bad = set(self.aggregators) - set(STRATEGIES)
        if bad:
            raise EvaluationError(f"unknown aggregators {sorted(bad)}")
        if not self.models:
            raise EvaluationError("no base models selected")

    def chunk_counts(self) -> tuple[int, int, int]:
        _, val, test = self.split
        n_test = max(1, round(test * self.folds))
        n_val = max(1, round(val * self.folds))
        n_train = self.folds - n_test - n_val
        if n_train < 1:
            raise EvaluationError(f"split {self.split} leaves no training chunk with {self.folds} folds")
        return n_train, n_val, n_test

    def systems(self) -> list[str]:
        return list(self.models) + [f"mapx-{a}" for a in self.aggregators]


@dataclass
class Fold:
    index: int
    train: list[str]
    val: list[str]
    test: list[str]


def make_folds(corpus: Corpus, config: EvalConfig) -> list[Fold]:
    config.validate()
    ids = sorted(corpus.labeled_doc_ids())
    if len(ids) < 2 * config.folds:
        raise EvaluationError(
            f"{len(ids)} labeled documents is too few for {config.folds} folds (need at least {2 * config.folds})"
        )
    _, n_val, n_test = config.chunk_counts()
    rng = np.random.default_rng(config.seed)
    order = [ids[i] for i in rng.permutation(len(ids))]
    chunks = [list(c) for c in np.array_split(np.array(order, dtype=object), config.folds)]
    folds = []
    for k in range(config.folds):
        test_c = {(k + j) % config.folds for j in range(n_test)}
        val_c = {(k + n_test + j) % config.folds for j in range(n_val)}
        pick = lambda cs: [d for c in sorted(cs) for d in chunks[c]]  # noqa: E731
        train_c = set(range(config.folds)) - test_c - val_c
        folds.append(Fold(k, pick(train_c), pick(val_c), pick(test_c)))
    return folds


@dataclass
class FoldRun:
    fold: Fold
    models: list[BaseModel]
    context: TrainingContext


def _fold_runs(corpus: Corpus, config: EvalConfig, table: ReliabilityTable | None) -> Iterator[FoldRun]:
    for fold in make_folds(corpus, config):
        models, context = train_models(corpus, fold.train, fold.val, config.models, table, config.threshold)
        yield FoldRun(fold, models, context)


def _system_probs(sd: ScoredDocument) -> dict[str, float]:
    out = {p.model_id: p.prob_false for p in sd.predictions}
    out.update({f"mapx-{s}": a.prob_false for s, a in sd.aggregates.items()})
    return out


def _score_fold(corpus, run: FoldRun, config, table, observe_hours) -> list[ScoredDocument]:
    docs = enrich_many(corpus, run.fold.test, run.context, observe_hours, table)
    return score(run.models, docs, config.aggregators)


# --------------------------------------------------------------------------
# evaluate


@dataclass
class MetricsTable:
    systems: list[str]
    rows: list[dict]  # {"fold", "system", "accuracy", "f1"}

    def mean(self, system: str, metric: str = "f1") -> float:
        return statistics.fmean(r[metric] for r in self.rows if r["system"] == system)

    def summary(self) -> list[dict]:
        return [
            {"system": s, "accuracy": self.mean(s, "accuracy"), "f1": self.mean(s, "f1")} for s in self.systems
        ]

    def to_csv(self) -> str:
        return _csv(["fold", "system", "accuracy", "f1"], self.rows)

    def to_json(self) -> str:
        return json.dumps({"per_fold": self.rows, "mean": self.summary()}, indent=2, sort_keys=True)


def evaluate(corpus: Corpus, config: EvalConfig | None = None, table: ReliabilityTable | None = None) -> MetricsTable:
    config = config or EvalConfig()
    systems = config.systems()
    rows = []
    for run in _fold_runs(corpus, config, table):
        scored = _score_fold(corpus, run, config, table, config.observe_hours)
        y = [corpus.documents[sd.doc_id].label for sd in scored]
        probs = [_system_probs(sd) for sd in scored]
        for s in systems:
            pred = threshold([p[s] for p in probs], config.threshold)
            rows.append({"fold": run.fold.index, "system": s, "accuracy": accuracy(y, pred), "f1": f1_score(y, pred)})
    return MetricsTable(systems, rows)


# --------------------------------------------------------------------------
# degradation


@dataclass
class DegradationRow:
    system: str
    f1_reliable: float
    f1_unreliable: float
    diff: float
    abs_diff: float
    rank: int


@dataclass
class DegradationReport:
    factor_name: str
    n_reliable: int
    n_unreliable: int
    rows: list[DegradationRow] = field(default_factory=list)

    def row(self, system: str) -> DegradationRow:
        return next(r for r in self.rows if r.system == system)

    def to_csv(self) -> str:
        cols = ["factor", "system", "f1_reliable", "f1_unreliable", "diff", "abs_diff", "rank"]
        return _csv(cols, [{"factor": self.factor_name, **asdict(r)} for r in self.rows])

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def format_table(self) -> str:
        return "\n".join(
            f"{r.system:<24} {r.f1_reliable:.2f} -> {r.f1_unreliable:.2f} ({r.diff:+.2f}) [{r.rank}]" for r in self.rows
        )


def dense_rank(values: Sequence[float], ndigits: int = 12) -> list[int]:
    """Ascending dense ranks starting at 1; values equal after rounding share a rank."""
    keys = [round(v, ndigits) for v in values]
    order = {v: i + 1 for i, v in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


def _partition(factor: str, sd: ScoredDocument, table: ReliabilityTable) -> str | None:
    for info in sd.enriched.informations:
        for f in info.factors:
            if f.name != factor:
                continue
            if factor == "publisher_type":
                return "reliable" if f.value == "existing" else "unreliable"
            b = table.bin_index(factor, f.value)
            if b == 0:
                return "unreliable"
            if b == table.n_bins(factor) - 1:
                return "reliable"
            return None
    raise EvaluationError(f"factor {factor!r} not produced by the enricher")


def degrade(
    corpus: Corpus, config: EvalConfig | None = None, factor_name: str = "publisher_type",
    table: ReliabilityTable | None = None,
) -> DegradationReport:
    """F1 on reliable vs unreliable test documents for one reliability factor.

    Test predictions are pooled across folds; a document's side is decided
    by the factor as seen in that fold (``publisher_type`` depends on the
    fold's training publishers). Count factors keep only the bottom
    (unreliable) and top (reliable) bins of the lookup table.
    """
    if factor_name not in DEGRADATION_FACTORS:
        raise EvaluationError(f"factor must be one of {DEGRADATION_FACTORS}, got {factor_name!r}")
    config = config or EvalConfig()
    lookup = table or ReliabilityTable()
    systems = config.systems()
    sides: dict[str, tuple[list[int], list[dict]]] = {"reliable": ([], []), "unreliable": ([], [])}
    for run in _fold_runs(corpus, config, table):
        for sd in _score_fold(corpus, run, config, table, config.observe_hours):
            side = _partition(factor_name, sd, lookup)
            if side is None:
                continue
            sides[side][0].append(corpus.documents[sd.doc_id].label)
            sides[side][1].append(_system_probs(sd))
    for side, (y, _) in sides.items():
        if not y:
            raise EvaluationError(f"{factor_name}: the {side} partition is empty")

    f1s = {}
    for side, (y, probs) in sides.items():
        f1s[side] = {s: f1_score(y, threshold([p[s] for p in probs], config.threshold)) for s in systems}
    diffs = [f1s["reliable"][s] - f1s["unreliable"][s] for s in systems]
    ranks = dense_rank(diffs)
    rows = [
        DegradationRow(s, f1s["reliable"][s], f1s["unreliable"][s], d, abs(d), r)
        for s, d, r in zip(systems, diffs, ranks)
    ]
    return DegradationReport(factor_name, len(sides["reliable"][0]), len(sides["unreliable"][0]), rows)


# --------------------------------------------------------------------------
# temporal


@dataclass
class TemporalReport:
    snapshot_hours: list[float]
    f1: dict[str, list[float]]
    mean_reliability: dict[str, list[float]]

    def std(self, system: str) -> float:
        return statistics.pstdev(self.f1[system])

    def to_long_csv(self) -> str:
        rows = []
        for s, series in self.f1.items():
            for h, v in zip(self.snapshot_hours, series):
                rows.append({"system": s, "hours": h, "metric": "f1", "value": v})
        for m, series in self.mean_reliability.items():
            for h, v in zip(self.snapshot_hours, series):
                rows.append({"system": m, "hours": h, "metric": "mean_reliability", "value": v})
        return _csv(["system", "hours", "metric", "value"], rows)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def temporal(
    corpus: Corpus,
    config: EvalConfig | None = None,
    snapshot_hours: Sequence[float] = DEFAULT_SNAPSHOTS,
    table: ReliabilityTable | None = None,
) -> TemporalReport:
    """F1 per system with test documents observed ``t`` hours after publication.

    Models are trained once per fold on fully observed training documents;
    only the test documents' view of the context network changes.
    """
    config = config or EvalConfig()
    hours = [float(h) for h in snapshot_hours]
    if not hours:
        raise EvaluationError("no snapshots requested")
    if any(h < 0 for h in hours):
        raise EvaluationError("snapshot hours must be nonnegative")
    systems = config.systems()
    y: list[int] = []
    probs: list[list[dict]] = [[] for _ in hours]
    rel: list[dict[str, list[float]]] = [{m: [] for m in config.models} for _ in hours]
    for run in _fold_runs(corpus, config, table):
        y.extend(corpus.documents[d].label for d in run.fold.test)
        for k, h in enumerate(hours):
            for sd in _score_fold(corpus, run, config, table, h):
                probs[k].append(_system_probs(sd))
                for p in sd.predictions:
                    rel[k][p.model_id].append(p.model_reliability)
    f1 = {s: [f1_score(y, threshold([p[s] for p in probs[k]], config.threshold)) for k in range(len(hours))] for s in systems}
    mean_rel = {m: [statistics.fmean(rel[k][m]) for k in range(len(hours))] for m in config.models}
    return TemporalReport(hours, f1, mean_rel)


def _csv(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: r[c] for c in columns})
    return buf.getvalue()
