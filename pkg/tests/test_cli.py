import json
from importlib import resources

import jsonschema
import pytest

from mapx.cli import explanation_from_dict, main
from mapx.explainer import render


def _schema(name):
    registry_base = resources.files("mapx").joinpath("schemas")
    return json.loads(registry_base.joinpath(name).read_text())


def _validator(name):
    from referencing import Registry, Resource

    schemas = {n: _schema(n) for n in ("explanation.schema.json", "prediction.schema.json", "model_index.schema.json")}
    registry = Registry().with_resources((s["$id"], Resource.from_contents(s)) for s in schemas.values())
    return jsonschema.Draft202012Validator(schemas[name], registry=registry)


def _tree(path):
    return {p.relative_to(path).as_posix(): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--out", str(out), "--seed", "7", "--docs", "120", "--publishers", "15", "--users", "40"]) == 0
    return out


def test_synth_deterministic(synth_dir, tmp_path):
    assert main(["synth", "--out", str(tmp_path), "--seed", "7", "--docs", "120", "--publishers", "15", "--users", "40"]) == 0
    assert _tree(tmp_path) == _tree(synth_dir)
    manifest = json.loads((synth_dir / "run_manifest.json").read_text())
    assert manifest["command"] == "synth" and manifest["seed"] == 7


def test_predict_worked_example(worked_example, tmp_path):
    argv = ["predict", "--data", str(worked_example), "--model-dir", str(worked_example / "models"),
            "--aggregator", "dapa", "--explain", "--at-hours", "2", "--out", str(tmp_path)]
    assert main(argv) == 0
    (rec,) = [json.loads(line) for line in (tmp_path / "predictions.jsonl").read_text().splitlines()]
    assert round(rec["prob_false"], 2) == 0.59
    assert rec["prob_false"] == pytest.approx(0.5865686, abs=1e-6)
    assert f"{rec['explanation']['tier1']['share']:.0%}" == "78%"
    _validator("prediction.schema.json").validate(rec)
    text = render(explanation_from_dict(rec["explanation"]), "text")
    assert "content_words contributed 78%" in text
    assert (tmp_path / "run_manifest.json").exists()


def test_predict_stdout(worked_example, capsys):
    assert main(["predict", "--data", str(worked_example), "--model-dir", str(worked_example / "models"), "--aggregator", "max", "--at-hours", "2"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["prob_false"] == 0.62 and rec["strategy"] == "max"
    assert rec["observe_at"] == 1_700_000_000 + 2 * 3600


def test_explain_text(worked_example, capsys):
    argv = ["explain", "--data", str(worked_example), "--model-dir", str(worked_example / "models"),
            "--doc", "d1", "--at-hours", "2", "--format", "text"]
    assert main(argv) == 0
    out = capsys.readouterr().out
    for label in ("Tier 1", "Tier 2", "Tier 3", "Tier 4", "78%", "word_count=542"):
        assert label in out


def test_explain_json_later_snapshot(worked_example, capsys):
    argv = ["explain", "--data", str(worked_example), "--model-dir", str(worked_example / "models"), "--doc", "d1", "--at-hours", "168"]
    assert main(argv) == 0
    d = json.loads(capsys.readouterr().out)
    _validator("explanation.schema.json").validate(d)
    assert d["tier1"]["model_id"] == "content_words"
    assert d["tier1"]["share"] < 0.78  # user history has become more reliable


def test_train_predict_round_trip(synth_dir, tmp_path):
    models = tmp_path / "models"
    assert main(["train", "--data", str(synth_dir), "--model-dir", str(models)]) == 0
    _validator("model_index.schema.json").validate(json.loads((models / "index.json").read_text()))
    out = tmp_path / "pred"
    assert main(["predict", "--data", str(synth_dir), "--model-dir", str(models), "--at-hours", "24", "--out", str(out), "--explain"]) == 0
    records = [json.loads(line) for line in (out / "predictions.jsonl").read_text().splitlines()]
    assert len(records) == 120
    v = _validator("prediction.schema.json")
    for r in records:
        v.validate(r)


def test_evaluate_and_rerun(synth_dir, tmp_path):
    out = tmp_path / "eval"
    assert main(["evaluate", "--data", str(synth_dir), "--out", str(out), "--folds", "5", "--seed", "3"]) == 0
    first = (out / "metrics.csv").read_bytes()
    (out / "metrics.csv").unlink()
    assert main(["rerun", str(out / "run_manifest.json")]) == 0
    assert (out / "metrics.csv").read_bytes() == first


def test_degrade_and_temporal(tmp_path):
    data = tmp_path / "data"
    assert main(["synth", "--out", str(data), "--preset", "publisher-heavy", "--docs", "200", "--publishers", "110"]) == 0
    assert main(["degrade", "--data", str(data), "--out", str(tmp_path / "d"), "--folds", "4"]) == 0
    assert (tmp_path / "d" / "degrade_publisher_type.csv").exists()
    assert main(["temporal", "--data", str(data), "--out", str(tmp_path / "t"), "--folds", "4", "--snapshots", "0,24"]) == 0
    rep = json.loads((tmp_path / "t" / "temporal.json").read_text())
    assert rep["snapshot_hours"] == [0.0, 24.0]


def test_evaluate_too_small(tmp_path, capsys):
    data = tmp_path / "tiny"
    assert main(["synth", "--out", str(data), "--docs", "5", "--publishers", "2", "--users", "5"]) == 0
    code = main(["evaluate", "--data", str(data), "--out", str(tmp_path / "e"), "--folds", "10"])
    assert code != 0
    assert "too few" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["predict", "--data", "/nonexistent", "--model-dir", "/nonexistent"],
        ["evaluate", "--data", "/nonexistent", "--out", "/tmp/x"],
        ["synth", "--out", "/tmp/x", "--bogus"],
        ["frobnicate"],
        ["rerun", "/nonexistent/run_manifest.json"],
    ],
)
def test_errors_exit_nonzero(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code != 0
    assert capsys.readouterr().err
