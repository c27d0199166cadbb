"""Base-model contract and the three reference predictors.

Any predictor can join the ensemble by subclassing :class:`BaseModel`:
declare which information kinds it ``consumes``, implement ``_fit`` and
``_predict_proba`` plus (de)serialization. The framework supplies the
reliability side of each :class:`Prediction`.

Reference models, all dependency-free:

* ``content_words``: multinomial naive Bayes over the document's tokens.
* ``publisher_credibility``: smoothed false rate of the publisher's training documents.
* ``user_credibility``: item-weighted mean of engaging users' smoothed false rates.
"""

from __future__ import annotations

import json
import math
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, ClassVar, Iterable, Sequence

from .enricher import EnrichedDocument, InformationKind

MODEL_DIR_VERSION = 1
SMOOTHING_BETA = 2.0


class ModelError(RuntimeError):
    pass


@dataclass(frozen=True)
class Prediction:
    model_id: str
    prob_false: float
    model_reliability: float


@dataclass(frozen=True)
class BaseModelDescriptor:
    model_id: str
    consumes: frozenset[InformationKind]
    validation_score: float | None = None

    @property
    def network(self) -> str:
        nets = {k.network for k in self.consumes}
        return nets.pop() if len(nets) == 1 else "hybrid"


class BaseModel(ABC):
    model_id: ClassVar[str]
    consumes: ClassVar[frozenset[InformationKind]]

    def __init__(self):
        self.trained = False
        self.validation_score: float | None = None

    @property
    def descriptor(self) -> BaseModelDescriptor:
        return BaseModelDescriptor(self.model_id, self.consumes, self.validation_score)

    def train(self, docs: Sequence[EnrichedDocument], labels: Sequence[int]) -> "BaseModel":
        if len(docs) != len(labels):
            raise ModelError(f"{self.model_id}: {len(docs)} documents but {len(labels)} labels")
        if not docs:
            raise ModelError(f"{self.model_id}: empty training set")
        if any(y not in (0, 1) for y in labels):
            raise ModelError(f"{self.model_id}: labels must be 0/1")
        self._fit(docs, [int(y) for y in labels])
        self.trained = True
        return self

    def predict(self, doc: EnrichedDocument) -> Prediction:
        if not self.trained:
            raise ModelError(f"{self.model_id}: predict called before train")
        p = min(1.0, max(0.0, float(self._predict_proba(doc))))
        rel = [doc.get(k).reliability for k in sorted(self.consumes)]
        return Prediction(self.model_id, p, sum(rel) / len(rel))

    @abstractmethod
    def _fit(self, docs: Sequence[EnrichedDocument], labels: list[int]) -> None: ...

    @abstractmethod
    def _predict_proba(self, doc: EnrichedDocument) -> float: ...

    @abstractmethod
    def state(self) -> dict[str, Any]:
        """JSON-serializable learned parameters."""

    @abstractmethod
    def load_state(self, state: dict[str, Any]) -> None: ...


def _prior(labels: Sequence[int]) -> float:
    return sum(labels) / len(labels)


class ContentWordsModel(BaseModel):
    model_id = "content_words"
    consumes = frozenset({InformationKind.WORDS})

    def __init__(self, alpha: float = 1.0):
        super().__init__()
        self.alpha = alpha
        self.class_docs = [0, 0]
        self.word_counts: list[dict[str, int]] = [{}, {}]

    def _fit(self, docs, labels):
        if len(set(labels)) < 2:
            raise ModelError("content_words needs both classes in the training set")
        counts = [Counter(), Counter()]
        for d, y in zip(docs, labels):
            counts[y].update(d.get(InformationKind.WORDS).payload["tokens"])
        self.class_docs = [labels.count(0), labels.count(1)]
        self.word_counts = [dict(sorted(c.items())) for c in counts]

    def _setup(self):
        vocab = set(self.word_counts[0]) | set(self.word_counts[1])
        self._vocab = vocab
        self._denom = [sum(c.values()) + self.alpha * len(vocab) for c in self.word_counts]

    def _predict_proba(self, doc):
        if getattr(self, "_vocab", None) is None:
            self._setup()
        n = sum(self.class_docs)
        # log-odds of false vs true
        z = math.log(self.class_docs[1] / n) - math.log(self.class_docs[0] / n)
        for w, k in doc.get(InformationKind.WORDS).payload["tokens"].items():
            if w not in self._vocab:
                continue
            lf = math.log((self.word_counts[1].get(w, 0) + self.alpha) / self._denom[1])
            lt = math.log((self.word_counts[0].get(w, 0) + self.alpha) / self._denom[0])
            z += k * (lf - lt)
        if z >= 0:
            return 1.0 / (1.0 + math.exp(-z))
        e = math.exp(z)
        return e / (1.0 + e)

    def state(self):
        return {"alpha": self.alpha, "class_docs": self.class_docs, "word_counts": self.word_counts}

    def load_state(self, state):
        self.alpha = float(state["alpha"])
        self.class_docs = [int(x) for x in state["class_docs"]]
        self.word_counts = [{str(k): int(v) for k, v in c.items()} for c in state["word_counts"]]
        self._vocab = None


class PublisherCredibilityModel(BaseModel):
    model_id = "publisher_credibility"
    consumes = frozenset({InformationKind.PUBLISHER_HISTORY})

    def __init__(self, beta: float = SMOOTHING_BETA):
        super().__init__()
        self.beta = beta
        self.prior = 0.5
        self.stats: dict[str, list[int]] = {}

    def _fit(self, docs, labels):
        self.prior = _prior(labels)
        stats: dict[str, list[int]] = {}
        for d, y in zip(docs, labels):
            pid = d.get(InformationKind.PUBLISHER_HISTORY).payload["publisher_id"]
            s = stats.setdefault(pid, [0, 0])
            s[0] += y
            s[1] += 1
        self.stats = dict(sorted(stats.items()))

    def score(self, publisher_id: str) -> float:
        n_false, n = self.stats.get(publisher_id, (0, 0))
        return (n_false + self.beta * self.prior) / (n + self.beta)

    def _predict_proba(self, doc):
        return self.score(doc.get(InformationKind.PUBLISHER_HISTORY).payload["publisher_id"])

    def state(self):
        return {"beta": self.beta, "prior": self.prior, "publishers": self.stats}

    def load_state(self, state):
        self.beta = float(state["beta"])
        self.prior = float(state["prior"])
        self.stats = {k: [int(v[0]), int(v[1])] for k, v in state["publishers"].items()}


class UserCredibilityModel(BaseModel):
    model_id = "user_credibility"
    consumes = frozenset({InformationKind.USER_HISTORY})

    def __init__(self, beta: float = SMOOTHING_BETA):
        super().__init__()
        self.beta = beta
        self.prior = 0.5
        self.stats: dict[str, list[int]] = {}

    def _fit(self, docs, labels):
        self.prior = _prior(labels)
        stats: dict[str, list[int]] = {}
        for d, y in zip(docs, labels):
            for uid, summary in d.get(InformationKind.USER_HISTORY).payload["users"].items():
                s = stats.setdefault(uid, [0, 0])
                s[0] += y * summary["items"]
                s[1] += summary["items"]
        self.stats = dict(sorted(stats.items()))

    def score(self, user_id: str) -> float:
        n_false, n = self.stats.get(user_id, (0, 0))
        return (n_false + self.beta * self.prior) / (n + self.beta)

    def _predict_proba(self, doc):
        users = doc.get(InformationKind.USER_HISTORY).payload["users"]
        total = sum(s["items"] for s in users.values())
        if total == 0:
            return self.prior
        return sum(s["items"] * self.score(u) for u, s in users.items()) / total

    def state(self):
        return {"beta": self.beta, "prior": self.prior, "users": self.stats}

    def load_state(self, state):
        self.beta = float(state["beta"])
        self.prior = float(state["prior"])
        self.stats = {k: [int(v[0]), int(v[1])] for k, v in state["users"].items()}


REGISTRY: dict[str, type[BaseModel]] = {
    cls.model_id: cls for cls in (ContentWordsModel, PublisherCredibilityModel, UserCredibilityModel)
}
DEFAULT_MODELS = tuple(REGISTRY)


def create(model_ids: Iterable[str] = DEFAULT_MODELS) -> list[BaseModel]:
    models = []
    for mid in model_ids:
        if mid not in REGISTRY:
            raise ModelError(f"unknown base model {mid!r}; known: {', '.join(REGISTRY)}")
        models.append(REGISTRY[mid]())
    return models


def save_models(
    models: Sequence[BaseModel],
    model_dir: str | Path,
    *,
    training_publisher_ids: Iterable[str] = (),
    training_user_ids: Iterable[str] = (),
    reliability_table: dict | None = None,
) -> Path:
    """Write one ``<model_id>.json`` per model plus ``index.json``.

    The index records the descriptors, the publisher/user sets seen in
    training (needed to enrich new documents consistently) and, optionally,
    a reliability table pinned alongside the models.
    """
    model_dir = Path(model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for m in models:
        if not m.trained:
            raise ModelError(f"{m.model_id}: refusing to save an untrained model")
        fname = f"{m.model_id}.json"
        _write_json(model_dir / fname, {"model_id": m.model_id, "state": m.state()})
        entries.append(
            {
                "model_id": m.model_id,
                "file": fname,
                "consumes": sorted(k.value for k in m.consumes),
                "validation_score": m.validation_score,
            }
        )
    index = {
        "format_version": MODEL_DIR_VERSION,
        "models": entries,
        "training_publisher_ids": sorted(set(training_publisher_ids)),
        "training_user_ids": sorted(set(training_user_ids)),
    }
    if reliability_table is not None:
        _write_json(model_dir / "reliability.json", reliability_table)
        index["reliability_table"] = "reliability.json"
    _write_json(model_dir / "index.json", index)
    return model_dir


@dataclass
class ModelBundle:
    models: list[BaseModel]
    training_publisher_ids: frozenset[str]
    training_user_ids: frozenset[str]
    reliability_table: dict | None = None


def load_models(model_dir: str | Path) -> ModelBundle:
    model_dir = Path(model_dir)
    index_path = model_dir / "index.json"
    if not index_path.exists():
        raise ModelError(f"no index.json in {model_dir}")
    index = json.loads(index_path.read_text(encoding="utf-8"))
    if index.get("format_version") != MODEL_DIR_VERSION:
        raise ModelError(f"{index_path}: unsupported format_version {index.get('format_version')!r}")
    models = []
    for entry in index["models"]:
        blob = json.loads((model_dir / entry["file"]).read_text(encoding="utf-8"))
        (m,) = create([entry["model_id"]])
        m.load_state(blob["state"])
        m.validation_score = entry.get("validation_score")
        m.trained = True
        models.append(m)
    table = None
    if index.get("reliability_table"):
        table = json.loads((model_dir / index["reliability_table"]).read_text(encoding="utf-8"))
    return ModelBundle(
        models,
        frozenset(index.get("training_publisher_ids", ())),
        frozenset(index.get("training_user_ids", ())),
        table,
    )


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
