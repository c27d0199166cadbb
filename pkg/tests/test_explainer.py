import json
from importlib import resources

import jsonschema
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mapx.aggregator import dapa
from mapx.base_models import Prediction, load_models
from mapx.dataset_io import open_corpus
from mapx.enricher import ReliabilityTable
from mapx.explainer import explain, render
from mapx.pipeline import TrainingContext, enrich_many, score

from conftest import make_doc

IDS = ("content_words", "publisher_credibility", "user_credibility")


def _schema(name):
    return json.loads(resources.files("mapx").joinpath(f"schemas/{name}").read_text())


@pytest.fixture(scope="module")
def worked(worked_example):
    corpus = open_corpus(worked_example)
    bundle = load_models(worked_example / "models")
    ctx = TrainingContext(bundle.training_publisher_ids, bundle.training_user_ids, {})
    (doc,) = enrich_many(corpus, ["d1"], ctx, 2.0, ReliabilityTable(bundle.reliability_table))
    (sd,) = score(bundle.models, [doc])
    return sd, explain(sd.predictions, sd.enriched, sd.aggregates["dapa"], bundle.models)


class TestWorkedExample:
    def test_predictions(self, worked):
        sd, _ = worked
        got = [(p.model_id, round(p.prob_false, 10), round(p.model_reliability, 10)) for p in sd.predictions]
        assert got == [(m, p, r) for m, p, r in zip(IDS, (0.62, 0.5, 0.39), (0.8, 0.15, 0.07))]
        assert sd.aggregates["dapa"].prob_false == pytest.approx(0.5865686, abs=1e-7)

    def test_tiers(self, worked):
        _, e = worked
        assert e.tier1.model_id == "content_words"
        assert e.tier1.share == pytest.approx(0.8 / 1.02, abs=1e-12)
        assert round(e.tier1.share, 2) == 0.78
        assert (e.tier2.network, e.tier2.avg_reliability) == ("content", 0.8)
        assert (e.tier3.information, e.tier3.reliability) == ("words", 0.8)
        assert [(f.factor, f.value, f.score) for f in e.tier4] == [("word_count", 542, 0.8)]
        assert e.ties == ()

    def test_text(self, worked):
        text = render(worked[1], "text")
        assert "78%" in text
        for label in ("Tier 1", "Tier 2", "Tier 3", "Tier 4"):
            assert label in text
        assert "word_count=542" in text

    def test_json(self, worked):
        out = render(worked[1], "json")
        d = json.loads(out)
        assert d["tier1"]["model_id"] == "content_words"
        assert d == worked[1].to_dict()
        jsonschema.validate(d, _schema("explanation.schema.json"))

    def test_deterministic_bytes(self, worked):
        sd, e = worked
        again = explain(sd.predictions, sd.enriched, sd.aggregates["dapa"])
        assert render(again) == render(e) and render(again, "text") == render(e, "text")


def test_single_model_full_share():
    doc = make_doc(rel=(0.3, 0.9, 0.1))
    preds = [Prediction("user_credibility", 0.7, 0.1)]
    e = explain(preds, doc, dapa(preds))
    assert (e.tier1.model_id, e.tier1.share) == ("user_credibility", 1.0)
    assert e.tier2.network == "context" and e.tier3.information == "user_history"


def test_tie_flagged():
    doc = make_doc(rel=(0.5, 0.5, 0.2))
    preds = [Prediction("publisher_credibility", 0.4, 0.5), Prediction("content_words", 0.9, 0.5)]
    e = explain(preds, doc, dapa(preds))
    assert e.tier1.model_id == "content_words" and "tier1" in e.ties
    assert "Ties broken" in render(e, "text")


def test_empty_predictions_error():
    with pytest.raises(ValueError):
        explain([], make_doc(), None)


def test_render_bad_format(worked):
    with pytest.raises(ValueError):
        render(worked[1], "xml")


def test_hybrid_model_tiers():
    from mapx.enricher import InformationKind as K

    doc = make_doc(rel=(0.9, 0.2, 0.6))
    preds = [Prediction("hybrid", 0.3, 0.55)]
    e = explain(preds, doc, dapa(preds), {"hybrid": frozenset({K.PUBLISHER_HISTORY, K.USER_HISTORY})})
    # content side has only publisher history (0.2); context wins with 0.6
    assert (e.tier2.network, e.tier2.avg_reliability) == ("context", 0.6)
    assert e.tier3.information == "user_history"


@given(st.lists(st.floats(0.01, 1), min_size=3, max_size=3), st.floats(0.01, 100))
def test_tier1_scale_invariant(rels, c):
    doc = make_doc(rel=(0.5, 0.5, 0.5))
    a = [Prediction(m, 0.5, r) for m, r in zip(IDS, rels)]
    b = [Prediction(m, 0.5, r * c) for m, r in zip(IDS, rels)]
    ea, eb = explain(a, doc, dapa(a)), explain(b, doc, dapa(b))
    if "tier1" not in ea.ties and "tier1" not in eb.ties:
        assert ea.tier1.model_id == eb.tier1.model_id
        assert ea.tier1.share == pytest.approx(eb.tier1.share, abs=1e-12)


@given(st.lists(st.floats(0, 1), min_size=3, max_size=3))
def test_tier3_is_max_of_tier1_model(rels):
    doc = make_doc(rel=tuple(rels))
    preds = [Prediction(m, 0.5, r) for m, r in zip(IDS, rels)]
    if sum(rels) == 0:
        return
    e = explain(preds, doc, dapa(preds))
    assert e.tier3.reliability == max(p.model_reliability for p in preds)
    assert [f.score for f in e.tier4] == [e.tier3.reliability]
