"""JSON Lines corpus files and the synthetic corpus generator.

A corpus directory holds ``documents.jsonl``, ``items.jsonl`` and an
optional ``manifest.json``::

    documents.jsonl  {"doc_id", "publisher_id", "text", "publish_time", "label"?}
    items.jsonl      {"item_id", "doc_id", "user_id", "timestamp", "kind",
                      "parent_item_id"?, "text"?}

Labels are 0 (true news) or 1 (false news). Item records of kind
``friendship`` are accepted and dropped, nothing downstream reads them.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from .osmn import ITEM_KINDS, Corpus, CorpusError, Document, Item, build_corpus

DOCUMENTS_FILE = "documents.jsonl"
ITEMS_FILE = "items.jsonl"
MANIFEST_FILE = "manifest.json"
LABEL_SEMANTICS = {"0": "true-news", "1": "false-news"}

# worked example: one 542-word document with pinned models in ``models/``
WORKED_EXAMPLE = Path(__file__).parent / "fixtures" / "worked_example"


class DatasetError(CorpusError):
    pass


@dataclass
class CorpusManifest:
    documents_path: Path
    items_path: Path
    name: str = "corpus"
    label_semantics: dict[str, str] = field(default_factory=lambda: dict(LABEL_SEMANTICS))

    @classmethod
    def read(cls, path: str | Path) -> "CorpusManifest":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DatasetError(f"{path}: cannot read manifest ({exc})") from None
        base = path.parent
        try:
            return cls(
                documents_path=base / raw["documents_path"],
                items_path=base / raw["items_path"],
                name=raw.get("name", base.name),
                label_semantics=raw.get("label_semantics", dict(LABEL_SEMANTICS)),
            )
        except KeyError as exc:
            raise DatasetError(f"{path}: manifest missing field {exc}") from None

    def write(self, path: str | Path) -> None:
        path = Path(path)
        base = path.parent.resolve()
        raw = {
            "name": self.name,
            "documents_path": str(Path(self.documents_path).resolve().relative_to(base)),
            "items_path": str(Path(self.items_path).resolve().relative_to(base)),
            "label_semantics": self.label_semantics,
        }
        path.write_text(json.dumps(raw, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _records(path: Path) -> Iterator[tuple[int, dict]]:
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"{path}: {exc.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise DatasetError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, rec


def _field(rec, name, kind, where, optional=False):
    if name not in rec or rec[name] is None:
        if optional:
            return None
        raise DatasetError(f"{where}: missing field {name!r}")
    v = rec[name]
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise DatasetError(f"{where}: field {name!r} must be a finite number")
        return v
    if not isinstance(v, kind):
        raise DatasetError(f"{where}: field {name!r} must be {kind.__name__}")
    return v


def parse_documents(path: Path) -> list[Document]:
    out = []
    for lineno, rec in _records(path):
        where = f"{path}:{lineno}"
        label = rec.get("label")
        if label is not None and (isinstance(label, bool) or label not in (0, 1)):
            raise DatasetError(f"{where}: label must be 0 or 1")
        out.append(
            Document(
                doc_id=_field(rec, "doc_id", str, where),
                publisher_id=_field(rec, "publisher_id", str, where),
                text=_field(rec, "text", str, where),
                publish_time=_field(rec, "publish_time", float, where),
                label=label,
            )
        )
    return out


def parse_items(path: Path) -> list[Item]:
    out = []
    for lineno, rec in _records(path):
        where = f"{path}:{lineno}"
        kind = rec.get("kind", "post")
        if kind == "friendship":
            continue
        if kind not in ITEM_KINDS:
            raise DatasetError(f"{where}: unknown item kind {kind!r}")
        out.append(
            Item(
                item_id=_field(rec, "item_id", str, where),
                doc_id=_field(rec, "doc_id", str, where),
                user_id=_field(rec, "user_id", str, where),
                timestamp=_field(rec, "timestamp", float, where),
                kind=kind,
                parent_item_id=_field(rec, "parent_item_id", str, where, optional=True),
                text=_field(rec, "text", str, where, optional=True),
            )
        )
    return out


def load_corpus(manifest: CorpusManifest) -> Corpus:
    return build_corpus(parse_documents(Path(manifest.documents_path)), parse_items(Path(manifest.items_path)))


def resolve_manifest(path: str | Path) -> CorpusManifest:
    """Accept a manifest file or a directory with (optionally) a manifest in it."""
    path = Path(path)
    if path.is_dir():
        if (path / MANIFEST_FILE).exists():
            return CorpusManifest.read(path / MANIFEST_FILE)
        return CorpusManifest(path / DOCUMENTS_FILE, path / ITEMS_FILE, name=path.name)
    if path.exists():
        return CorpusManifest.read(path)
    raise DatasetError(f"{path}: no such corpus file or directory")


def open_corpus(path: str | Path) -> Corpus:
    return load_corpus(resolve_manifest(path))


def _clean(rec: dict) -> dict:
    return {k: v for k, v in rec.items() if v is not None}


def save_corpus(corpus: Corpus, out_dir: str | Path, name: str = "corpus") -> CorpusManifest:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = CorpusManifest(out_dir / DOCUMENTS_FILE, out_dir / ITEMS_FILE, name=name)
    with open(manifest.documents_path, "w", encoding="utf-8") as fh:
        for d in corpus.documents.values():
            fh.write(json.dumps(_clean(asdict(d)), sort_keys=True, ensure_ascii=False) + "\n")
    with open(manifest.items_path, "w", encoding="utf-8") as fh:
        for it in corpus.items.values():
            fh.write(json.dumps(_clean(asdict(it)), sort_keys=True, ensure_ascii=False) + "\n")
    manifest.write(out_dir / MANIFEST_FILE)
    return manifest


# --------------------------------------------------------------------------
# synthetic corpora

SIGNAL_CHANNELS = ("words", "publisher", "users")
EPOCH0 = 1_600_000_000


@dataclass
class SynthConfig:
    """Knobs for :func:`generate_synthetic`.

    ``signal_strengths`` sets, per channel, how strongly the label shows
    through: 0 makes the channel independent of the label, 1 makes it a
    clean (if sometimes short or sparse) reflection of it.
    ``singleton_fraction`` of documents come from one-off publishers whose
    reach is scaled by ``new_publisher_reach`` and whose words/users
    channels use ``new_publisher_signal`` when given.
    """

    n_publishers: int = 60
    n_documents: int = 1000
    n_users: int = 400
    false_rate: float = 0.5
    engagement_rate_per_hour: float = 0.15
    horizon_hours: float = 168.0
    seed: int = 0
    signal_strengths: dict[str, float] = field(
        default_factory=lambda: {"words": 0.5, "publisher": 0.5, "users": 0.25}
    )
    singleton_fraction: float = 0.0
    new_publisher_reach: float = 1.0
    new_publisher_signal: dict[str, float] | None = None
    median_words: float = 150.0
    signal_word_rate: float = 0.06
    mean_thread: float = 1.0

    def validate(self) -> None:
        for name in ("n_publishers", "n_documents", "n_users"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not 0.0 <= self.false_rate <= 1.0:
            raise ValueError("false_rate must lie in [0, 1]")
        if self.engagement_rate_per_hour < 0:
            raise ValueError("engagement_rate_per_hour must be nonnegative")
        if self.horizon_hours <= 0:
            raise ValueError("horizon_hours must be positive")
        if set(self.signal_strengths) - set(SIGNAL_CHANNELS):
            raise ValueError(f"signal channels are {SIGNAL_CHANNELS}")
        if self.new_publisher_signal and set(self.new_publisher_signal) - {"words", "users"}:
            raise ValueError("new_publisher_signal covers the words and users channels only")
        for k, v in {**self.signal_strengths, **(self.new_publisher_signal or {})}.items():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"signal strength {k}={v} outside [0, 1]")
        if not 0.0 <= self.singleton_fraction <= 1.0:
            raise ValueError("singleton_fraction must lie in [0, 1]")
        n_single = round(self.singleton_fraction * self.n_documents)
        needed = n_single + (1 if n_single < self.n_documents else 0)
        if self.n_publishers < needed:
            raise ValueError(f"singleton_fraction needs at least {needed} publishers")
        if self.median_words <= 0 or not 0 <= self.signal_word_rate <= 1 or self.mean_thread < 0:
            raise ValueError("median_words, signal_word_rate or mean_thread out of range")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


# Named starting points. "mixed" (the defaults) keeps the three base models
# roughly comparable; "publisher-heavy" makes publisher history the dominant
# channel for established outlets while half the documents come from
# one-off publishers whose text and audience carry the signal instead.
PRESETS: dict[str, dict[str, Any]] = {
    "mixed": {},
    "publisher-heavy": {
        "n_documents": 2000,
        "n_publishers": 1060,
        "singleton_fraction": 0.5,
        "signal_strengths": {"words": 0.3, "publisher": 0.95, "users": 0.3},
        "new_publisher_signal": {"words": 0.9, "users": 0.9},
    },
}


def preset(name: str, **overrides) -> SynthConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return SynthConfig(**{**PRESETS[name], **overrides})


_N_NEUTRAL = 3000
_N_STYLE = 300


def _zipf_weights(n: int, s: float = 1.05) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** s
    return w / w.sum()


def generate_synthetic(config: SynthConfig) -> Corpus:
    """Draw a labeled corpus whose channels carry label signal per ``config``.

    Publishers and users each get a latent credibility (false-leaning or
    not). A document's label follows its publisher's credibility with
    probability ``signal_strengths['publisher']``; its text mixes neutral
    words with a label-coloured vocabulary; engaging users are drawn from
    the label-matched pool with probability ``signal_strengths['users']``.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    sig = {"words": 0.0, "publisher": 0.0, "users": 0.0, **config.signal_strengths}
    n_docs = config.n_documents
    n_single = round(config.singleton_fraction * n_docs)
    n_regular_docs = n_docs - n_single
    n_regular_pubs = config.n_publishers - n_single if n_regular_docs else 0

    # publishers: regular ones share the non-singleton documents
    pub_fake = rng.random(config.n_publishers) < config.false_rate
    pub_reach = rng.lognormal(0.0, 0.5, config.n_publishers)
    pub_activity = rng.lognormal(0.0, 1.0, max(n_regular_pubs, 1))
    pub_of_doc = np.empty(n_docs, dtype=np.int64)
    if n_regular_docs:
        pub_of_doc[:n_regular_docs] = rng.choice(
            n_regular_pubs, size=n_regular_docs, p=pub_activity / pub_activity.sum()
        )
    pub_of_doc[n_regular_docs:] = n_regular_pubs + np.arange(n_single)
    is_single = np.arange(n_docs) >= n_regular_docs
    perm = rng.permutation(n_docs)
    pub_of_doc, is_single = pub_of_doc[perm], is_single[perm]

    def channel(name):
        s = np.full(n_docs, sig[name])
        if config.new_publisher_signal and name in config.new_publisher_signal:
            s[is_single] = config.new_publisher_signal[name]
        return s

    follows_pub = rng.random(n_docs) < sig["publisher"]
    base_label = rng.random(n_docs) < config.false_rate
    labels = np.where(follows_pub, pub_fake[pub_of_doc], base_label).astype(int)

    follows_label = rng.random(n_docs) < channel("words")
    style = np.where(follows_label, labels, rng.random(n_docs) < config.false_rate).astype(int)
    n_words = np.clip(np.rint(rng.lognormal(math.log(config.median_words), 0.9, n_docs)), 1, 3000).astype(int)
    neutral_p = _zipf_weights(_N_NEUTRAL)
    style_p = _zipf_weights(_N_STYLE, 0.8)
    publish = EPOCH0 + np.floor(rng.random(n_docs) * 365 * 86400).astype(np.int64)

    documents = []
    for i in range(n_docs):
        k = n_words[i]
        is_sig = rng.random(k) < config.signal_word_rate
        neutral = rng.choice(_N_NEUTRAL, size=k, p=neutral_p)
        styled = rng.choice(_N_STYLE, size=k, p=style_p)
        prefix = "b" if style[i] else "a"
        words = [f"{prefix}{s}" if flag else f"w{n}" for flag, n, s in zip(is_sig, neutral, styled)]
        documents.append(
            Document(
                doc_id=f"d{i:06d}",
                publisher_id=f"p{pub_of_doc[i]:05d}",
                text=" ".join(words),
                publish_time=int(publish[i]),
                label=int(labels[i]),
            )
        )

    # users: false-leaning pool engages false documents when the channel is on
    user_fake = rng.random(config.n_users) < config.false_rate
    user_activity = rng.lognormal(0.0, 1.0, config.n_users)
    pools = {}
    for flag in (0, 1):
        idx = np.flatnonzero(user_fake == bool(flag))
        if idx.size == 0:
            idx = np.arange(config.n_users)
        pools[flag] = (idx, user_activity[idx] / user_activity[idx].sum())
    all_users = (np.arange(config.n_users), user_activity / user_activity.sum())

    user_sig = channel("users")
    horizon_s = config.horizon_hours * 3600.0
    tau = horizon_s / 4.0
    items = []
    for i in range(n_docs):
        reach = pub_reach[pub_of_doc[i]] * (config.new_publisher_reach if is_single[i] else 1.0)
        lam_items = config.engagement_rate_per_hour * config.horizon_hours * reach
        thread = config.mean_thread * rng.lognormal(0.0, 0.8)
        n_events = rng.poisson(lam_items / (1.0 + thread))
        seq = 0
        for _ in range(n_events):
            pool_idx, pool_p = pools[labels[i]] if rng.random() < user_sig[i] else all_users
            user = int(rng.choice(pool_idx, p=pool_p))
            u = rng.random()
            t0 = -tau * math.log(1.0 - u * (1.0 - math.exp(-horizon_s / tau)))
            n_extra = rng.poisson(thread)
            times = [t0] + sorted(t0 + rng.random(n_extra) * (horizon_s - t0))
            kind = ("post", "share", "like")[int(rng.choice(3, p=[0.5, 0.3, 0.2]))]
            root = None
            for j, t in enumerate(times):
                item_id = f"i{i:06d}_{seq:04d}"
                seq += 1
                items.append(
                    Item(
                        item_id=item_id,
                        doc_id=documents[i].doc_id,
                        user_id=f"u{user:05d}",
                        timestamp=int(documents[i].publish_time + math.floor(t)),
                        kind=kind if j == 0 else "comment",
                        parent_item_id=root,
                    )
                )
                if j == 0:
                    root = item_id
    return build_corpus(documents, items)
