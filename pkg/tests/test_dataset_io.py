import json
import random

import pytest

from mapx.osmn import CorpusError
from mapx.dataset_io import (
    CorpusManifest,
    DatasetError,
    SynthConfig,
    generate_synthetic,
    load_corpus,
    open_corpus,
    preset,
    save_corpus,
)


def _write_lines(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")


def _manifest(tmp_path, docs, items):
    _write_lines(tmp_path / "documents.jsonl", docs)
    _write_lines(tmp_path / "items.jsonl", items)
    return CorpusManifest(tmp_path / "documents.jsonl", tmp_path / "items.jsonl")


DOCS = [
    {"doc_id": "a", "publisher_id": "p", "text": "one two", "publish_time": 100, "label": 0},
    {"doc_id": "b", "publisher_id": "p", "text": "three", "publish_time": 200},
]


def test_two_documents_no_items(tmp_path):
    c = load_corpus(_manifest(tmp_path, DOCS, []))
    assert len(c.documents) == 2 and len(c.items) == 0
    assert c.documents["b"].label is None


def test_missing_user_id_names_line(tmp_path):
    items = [
        {"item_id": "i1", "doc_id": "a", "user_id": "u", "timestamp": 150, "kind": "post"},
        {"item_id": "i2", "doc_id": "a", "timestamp": 160, "kind": "like"},
    ]
    with pytest.raises(DatasetError, match=r"items\.jsonl:2: missing field 'user_id'"):
        load_corpus(_manifest(tmp_path, DOCS, items))


def test_invalid_json_reports_line(tmp_path):
    (tmp_path / "documents.jsonl").write_text(json.dumps(DOCS[0]) + "\n{not json\n")
    (tmp_path / "items.jsonl").write_text("")
    with pytest.raises(DatasetError, match=r"documents\.jsonl:2"):
        open_corpus(tmp_path)


@pytest.mark.parametrize("bad", [{"label": 2}, {"label": True}, {"publish_time": "noon"}, {"text": None}])
def test_bad_document_fields(tmp_path, bad):
    with pytest.raises(DatasetError):
        load_corpus(_manifest(tmp_path, [{**DOCS[0], **bad}], []))


def test_integrity_failure_surfaces(tmp_path):
    items = [{"item_id": "i1", "doc_id": "zzz", "user_id": "u", "timestamp": 150, "kind": "post"}]
    with pytest.raises(CorpusError, match="unknown document"):
        load_corpus(_manifest(tmp_path, DOCS, items))


def test_friendship_records_are_ignored(tmp_path):
    items = [
        {"item_id": "f1", "kind": "friendship", "user_id": "u1", "friend_id": "u2"},
        {"item_id": "i1", "doc_id": "a", "user_id": "u1", "timestamp": 150, "kind": "post"},
    ]
    c = load_corpus(_manifest(tmp_path, DOCS, items))
    assert list(c.items) == ["i1"]


def test_missing_files(tmp_path):
    with pytest.raises(DatasetError):
        open_corpus(tmp_path / "nowhere")
    with pytest.raises(DatasetError):
        open_corpus(tmp_path)  # empty dir: documents.jsonl missing


def test_round_trip(tmp_path, small_synth):
    manifest = save_corpus(small_synth, tmp_path / "c")
    assert load_corpus(manifest) == small_synth
    assert open_corpus(tmp_path / "c" / "manifest.json") == small_synth


def test_line_order_does_not_matter(tmp_path, small_synth):
    save_corpus(small_synth, tmp_path)
    for name in ("documents.jsonl", "items.jsonl"):
        lines = (tmp_path / name).read_text().splitlines(keepends=True)
        random.Random(5).shuffle(lines)
        (tmp_path / name).write_text("".join(lines))
    assert open_corpus(tmp_path) == small_synth


def test_synthetic_is_deterministic(tmp_path):
    cfg = SynthConfig(n_documents=150, n_publishers=10, n_users=40, seed=11)
    save_corpus(generate_synthetic(cfg), tmp_path / "a")
    save_corpus(generate_synthetic(cfg), tmp_path / "b")
    for name in ("documents.jsonl", "items.jsonl", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_false_rate_zero_gives_only_true_news():
    c = generate_synthetic(SynthConfig(n_documents=300, false_rate=0.0, seed=2))
    assert {d.label for d in c.documents.values()} == {0}


def test_false_rate_concentration():
    # publisher channel off so labels are iid Bernoulli(0.3): sd = sqrt(.3*.7/1000) = 0.0145,
    # so +-0.05 is a 3.4-sigma band
    c = generate_synthetic(
        SynthConfig(n_documents=1000, false_rate=0.3, seed=4, signal_strengths={"words": 0.5, "publisher": 0.0, "users": 0.5})
    )
    frac = sum(d.label for d in c.documents.values()) / 1000
    assert abs(frac - 0.3) <= 0.05


def test_engagement_within_horizon(small_synth):
    horizon = SynthConfig().horizon_hours * 3600
    for it in small_synth.items.values():
        doc = small_synth.documents[it.doc_id]
        assert 0 <= it.timestamp - doc.publish_time <= horizon


def test_singleton_publishers():
    c = generate_synthetic(SynthConfig(n_documents=200, n_publishers=120, singleton_fraction=0.5, seed=1))
    sizes = [len(p.document_ids) for p in c.publishers.values()]
    assert sum(1 for s in sizes if s == 1) >= 100


@pytest.mark.parametrize(
    "kw",
    [
        {"false_rate": 1.5},
        {"n_documents": 0},
        {"signal_strengths": {"words": 2.0}},
        {"signal_strengths": {"colour": 0.5}},
        {"horizon_hours": 0},
        {"singleton_fraction": 1.0, "n_publishers": 5, "n_documents": 10},
        {"new_publisher_signal": {"publisher": 0.5}},
    ],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        generate_synthetic(SynthConfig(**kw))


def test_presets():
    assert preset("mixed") == SynthConfig()
    assert preset("publisher-heavy").singleton_fraction == 0.5
    with pytest.raises(ValueError):
        preset("nope")
