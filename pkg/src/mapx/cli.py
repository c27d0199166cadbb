"""``mapx`` command line.

Subcommands: synth, train, predict, explain, evaluate, degrade, temporal,
plus ``rerun`` which replays a ``run_manifest.json``. Every command that
writes an output directory records a run manifest in it.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import random
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .aggregator import STRATEGIES
from .base_models import DEFAULT_MODELS, ModelError, load_models, save_models
from .dataset_io import PRESETS, generate_synthetic, open_corpus, preset, save_corpus
from .enricher import ReliabilityTable, load_table
from .evaluation import DEFAULT_SNAPSHOTS, DEGRADATION_FACTORS, EvalConfig, degrade, evaluate, temporal
from .explainer import Explanation, render
from .osmn import CorpusError
from .pipeline import predict_corpus, train_models

log = logging.getLogger("mapx")

RUN_MANIFEST = "run_manifest.json"


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _signals(text: str) -> dict[str, float]:
    out = {}
    for part in _csv_list(text):
        name, _, value = part.partition("=")
        out[name] = float(value)
    return out


def _hours(text: str) -> float | None:
    return None if text in ("all", "inf") else float(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mapx", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"mapx {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    s.add_argument("--out", required=True, type=Path)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--preset", choices=sorted(PRESETS), default="mixed")
    s.add_argument("--docs", type=int, help="number of documents")
    s.add_argument("--publishers", type=int)
    s.add_argument("--users", type=int)
    s.add_argument("--false-rate", type=float)
    s.add_argument("--engagement-rate", type=float, help="items per hour per document")
    s.add_argument("--horizon-hours", type=float)
    s.add_argument("--signal", type=_signals, help="e.g. words=0.5,publisher=0.5,users=0.25")
    s.add_argument("--singleton-fraction", type=float)
    s.add_argument("--new-publisher-signal", type=_signals, help="e.g. words=0.9,users=0.9")

    def data(sp, required=True):
        sp.add_argument("--data", required=required, type=Path, help="corpus directory or manifest.json")

    def common_eval(sp):
        data(sp)
        sp.add_argument("--out", required=True, type=Path)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--folds", type=int, default=10)
        sp.add_argument("--models", type=_csv_list, default=list(DEFAULT_MODELS))
        sp.add_argument("--aggregators", type=_csv_list, default=list(STRATEGIES))
        sp.add_argument("--threshold", type=float, default=0.5)
        sp.add_argument("--at-hours", type=_hours, default=None, help="observation offset; default all items")
        sp.add_argument("--reliability-table", type=Path, default=None)

    t = sub.add_parser("train", help="train base models on every labeled document")
    data(t)
    t.add_argument("--model-dir", required=True, type=Path)
    t.add_argument("--models", type=_csv_list, default=list(DEFAULT_MODELS))
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--val-fraction", type=float, default=0.1)
    t.add_argument("--reliability-table", type=Path, default=None)

    pr = sub.add_parser("predict", help="score documents with trained models")
    data(pr)
    pr.add_argument("--model-dir", required=True, type=Path)
    pr.add_argument("--out", type=Path, default=None, help="output directory (default: stdout)")
    pr.add_argument("--aggregator", choices=STRATEGIES, default="dapa")
    pr.add_argument("--at-hours", type=_hours, default=None)
    pr.add_argument("--doc", action="append", default=None, help="restrict to these document ids")
    pr.add_argument("--explain", action="store_true")

    ex = sub.add_parser("explain", help="four-tier explanation of one document's prediction")
    data(ex)
    ex.add_argument("--model-dir", required=True, type=Path)
    ex.add_argument("--doc", required=True)
    ex.add_argument("--at-hours", type=_hours, default=None)
    ex.add_argument("--format", choices=("json", "text"), default="json")

    ev = sub.add_parser("evaluate", help="cross-validated accuracy/F1 per system")
    common_eval(ev)

    dg = sub.add_parser("degrade", help="F1 on reliable vs unreliable partitions of one factor")
    common_eval(dg)
    dg.add_argument("--factor", choices=DEGRADATION_FACTORS, default="publisher_type")

    tp = sub.add_parser("temporal", help="F1 per system across observation snapshots")
    common_eval(tp)
    tp.add_argument("--snapshots", type=lambda s: [float(x) for x in _csv_list(s)], default=list(DEFAULT_SNAPSHOTS))

    rr = sub.add_parser("rerun", help="replay the command recorded in a run manifest")
    rr.add_argument("manifest", type=Path)
    return p


def _seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % 2**32)


PATH_FLAGS = ("--data", "--out", "--model-dir", "--reliability-table")


def _map_path_args(argv: Sequence[str], fn) -> list[str]:
    out, expect = [], False
    for tok in argv:
        if expect:
            out.append(fn(tok))
            expect = False
        elif tok in PATH_FLAGS:
            out.append(tok)
            expect = True
        elif tok.split("=", 1)[0] in PATH_FLAGS and "=" in tok:
            flag, val = tok.split("=", 1)
            out.append(f"{flag}={fn(val)}")
        else:
            out.append(tok)
    return out


def _write_manifest(out_dir: Path, args: argparse.Namespace, argv: Sequence[str], outputs: list[str]) -> None:
    """Record the run; path arguments are stored relative to ``out_dir`` so the tree is relocatable."""
    base = out_dir.resolve()
    rel = lambda v: os.path.relpath(Path(v).resolve(), base)  # noqa: E731
    config = {
        k: (rel(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k != "command"
    }
    manifest = {
        "command": args.command,
        "argv": _map_path_args(argv, rel),
        "config": config,
        "seed": getattr(args, "seed", None),
        "outputs": sorted(outputs),
        "mapx_version": __version__,
    }
    (out_dir / RUN_MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write(out_dir: Path, name: str, text: str, written: list[str]) -> None:
    (out_dir / name).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    written.append(name)


def _table(path: Path | None) -> ReliabilityTable | None:
    return load_table(path) if path else None


_SYNTH_FLAGS = {
    "docs": "n_documents",
    "publishers": "n_publishers",
    "users": "n_users",
    "false_rate": "false_rate",
    "engagement_rate": "engagement_rate_per_hour",
    "horizon_hours": "horizon_hours",
    "singleton_fraction": "singleton_fraction",
    "new_publisher_signal": "new_publisher_signal",
}


def cmd_synth(args, argv):
    overrides = {field: getattr(args, flag) for flag, field in _SYNTH_FLAGS.items() if getattr(args, flag) is not None}
    cfg = preset(args.preset, seed=args.seed, **overrides)
    if args.signal is not None:
        cfg.signal_strengths = {**cfg.signal_strengths, **args.signal}
    corpus = generate_synthetic(cfg)
    save_corpus(corpus, args.out, name=f"synthetic-seed{args.seed}")
    written = ["documents.jsonl", "items.jsonl", "manifest.json"]
    _write(args.out, "synth_config.json", json.dumps(cfg.to_dict(), indent=2, sort_keys=True), written)
    _write_manifest(args.out, args, argv, written)
    log.info("wrote %d documents, %d items to %s", len(corpus.documents), len(corpus.items), args.out)


def cmd_train(args, argv):
    corpus = open_corpus(args.data)
    table = _table(args.reliability_table)
    ids = sorted(corpus.labeled_doc_ids())
    if not ids:
        raise CorpusError("no labeled documents to train on")
    rng = np.random.default_rng(args.seed)
    order = [ids[i] for i in rng.permutation(len(ids))]
    n_val = int(round(args.val_fraction * len(ids)))
    val, train = sorted(order[:n_val]), sorted(order[n_val:])
    models, ctx = train_models(corpus, train, val, args.models, table)
    save_models(
        models,
        args.model_dir,
        training_publisher_ids=ctx.publisher_ids,
        training_user_ids=ctx.user_ids,
        reliability_table=table.to_dict() if table else None,
    )
    written = sorted(p.name for p in args.model_dir.iterdir() if p.name != RUN_MANIFEST)
    _write_manifest(args.model_dir, args, argv, written)


def cmd_predict(args, argv):
    corpus = open_corpus(args.data)
    bundle = load_models(args.model_dir)
    records = predict_corpus(corpus, bundle, args.doc, args.at_hours, args.aggregator, args.explain)
    lines = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    if args.out is None:
        sys.stdout.write(lines)
        return
    args.out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    _write(args.out, "predictions.jsonl", lines, written)
    _write_manifest(args.out, args, argv, written)


def cmd_explain(args, argv):
    corpus = open_corpus(args.data)
    bundle = load_models(args.model_dir)
    (rec,) = predict_corpus(corpus, bundle, [args.doc], args.at_hours, "dapa", with_explanation=True)
    explanation = explanation_from_dict(rec["explanation"])
    sys.stdout.write(render(explanation, args.format) + ("\n" if args.format == "json" else ""))


def explanation_from_dict(d: dict) -> Explanation:
    from .explainer import Tier1, Tier2, Tier3, Tier4Factor

    return Explanation(
        d["doc_id"],
        math.inf if d["observe_at"] is None else d["observe_at"],
        Tier1(**d["tier1"]),
        Tier2(**d["tier2"]),
        Tier3(**d["tier3"]),
        tuple(Tier4Factor(**f) for f in d["tier4"]),
        tuple(d.get("ties", ())),
    )


def _eval_config(args) -> EvalConfig:
    return EvalConfig(
        folds=args.folds,
        seed=args.seed,
        aggregators=tuple(args.aggregators),
        models=tuple(args.models),
        threshold=args.threshold,
        observe_hours=args.at_hours,
    )


def cmd_evaluate(args, argv):
    corpus = open_corpus(args.data)
    table = evaluate(corpus, _eval_config(args), _table(args.reliability_table))
    args.out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    _write(args.out, "metrics.csv", table.to_csv(), written)
    _write(args.out, "metrics.json", table.to_json(), written)
    _write_manifest(args.out, args, argv, written)
    for row in table.summary():
        print(f"{row['system']:<24} acc={row['accuracy']:.3f} f1={row['f1']:.3f}")


def cmd_degrade(args, argv):
    corpus = open_corpus(args.data)
    report = degrade(corpus, _eval_config(args), args.factor, _table(args.reliability_table))
    args.out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    _write(args.out, f"degrade_{args.factor}.csv", report.to_csv(), written)
    _write(args.out, f"degrade_{args.factor}.json", report.to_json(), written)
    _write_manifest(args.out, args, argv, written)
    print(report.format_table())


def cmd_temporal(args, argv):
    corpus = open_corpus(args.data)
    report = temporal(corpus, _eval_config(args), args.snapshots, _table(args.reliability_table))
    args.out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    _write(args.out, "temporal_long.csv", report.to_long_csv(), written)
    _write(args.out, "temporal.json", report.to_json(), written)
    _write_manifest(args.out, args, argv, written)
    for s, series in report.f1.items():
        print(f"{s:<24} " + " ".join(f"{v:.3f}" for v in series))


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "predict": cmd_predict,
    "explain": cmd_explain,
    "evaluate": cmd_evaluate,
    "degrade": cmd_degrade,
    "temporal": cmd_temporal,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "rerun":
        try:
            recorded = json.loads(args.manifest.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"mapx: cannot read {args.manifest}: {exc}", file=sys.stderr)
            return 2
        base = args.manifest.resolve().parent
        return main(_map_path_args(recorded["argv"], lambda v: str(base / v)))
    _seed_everything(getattr(args, "seed", 0) or 0)
    try:
        COMMANDS[args.command](args, argv)
    except (CorpusError, ModelError, ValueError, OSError) as exc:
        print(f"mapx {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
