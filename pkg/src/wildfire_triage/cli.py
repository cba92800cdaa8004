"""Command-line entry point wiring the full pipeline.

    triage <command> --config <path> [--seed N] [--out DIR]

Commands: ingest, agree, topics, train, eval, zeroshot, trends. Every
command writes its artifacts plus one manifest under --out. Exit codes:
0 success, 1 config/data error (with a machine-readable error report),
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import annotation, corpus, evaluation, taxonomy, topics, trends, zeroshot
from .manifest import RunManifest, config_hash

COMMANDS = ("ingest", "agree", "topics", "train", "eval", "zeroshot", "trends")

_FUSION_ENUM = ("transformer", "concat", "cross_attention", "none")
_HEAD_ENUM = ("mlp", "linear")


def validate_config(config: dict, command: str | None = None) -> list[str]:
    """Schema violations as "field.path: problem" strings; empty when ok."""
    violations: list[str] = []

    def check_path(section: str, key: str, required: bool = True):
        sec = config.get(section, {})
        value = sec.get(key)
        if value is None:
            if required:
                violations.append(f"{section}.{key}: required path missing")
            return
        if not Path(value).exists():
            violations.append(f"{section}.{key}: path does not exist: {value}")

    model = config.get("model", {})
    if "dropout" in model and not 0 <= float(model["dropout"]) < 1:
        violations.append(f"model.dropout: must be in [0,1), got {model['dropout']}")
    if "fusion" in model and model["fusion"] not in _FUSION_ENUM:
        violations.append(
            f"model.fusion: {model['fusion']!r} not one of {list(_FUSION_ENUM)}")
    if "head" in model and model["head"] not in _HEAD_ENUM:
        violations.append(f"model.head: {model['head']!r} not one of {list(_HEAD_ENUM)}")
    training = config.get("training", {})
    for key in ("batch_size", "learning_rate", "epochs"):
        if key in training and float(training[key]) < 0:
            violations.append(f"training.{key}: must be nonnegative")
    if "train_fraction" in config.get("split", {}):
        frac = float(config["split"]["train_fraction"])
        if not 0 < frac < 1:
            violations.append(f"split.train_fraction: must be in (0,1), got {frac}")
    if command == "ingest":
        check_path("ingest", "posts")
    elif command == "agree":
        check_path("agree", "annotations")
    elif command == "topics":
        check_path("topics", "posts")
        check_path("topics", "embeddings")
    elif command == "train":
        check_path("train", "features")
    elif command == "eval":
        preds = config.get("eval", {}).get("predictions")
        if not preds:
            violations.append("eval.predictions: required list of prediction files")
        else:
            for p in preds:
                if not Path(p).exists():
                    violations.append(f"eval.predictions: path does not exist: {p}")
    elif command == "zeroshot":
        check_path("zeroshot", "posts")
        check_path("zeroshot", "responses")
    elif command == "trends":
        check_path("trends", "posts")
        check_path("trends", "gazetteer")
        if "year" not in config.get("trends", {}):
            violations.append("trends.year: required")
    return violations


def _load_labeled_jsonl(path):
    """JSONL of {id, <value key>} pairs, in file order."""
    rows = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def _cmd_ingest(config, out_dir, manifest):
    cfg = config["ingest"]
    result = corpus.load_posts(cfg["posts"], cfg.get("image_root"))
    manifest.add_input(cfg["posts"])
    posts = corpus.dedupe(result.posts)
    with (out_dir / "posts.jsonl").open("w", encoding="utf-8") as fh:
        for p in posts:
            fh.write(json.dumps({
                "id": p.id, "text": p.text, "image": p.image_path,
                "created_at": p.created_at.isoformat(),
                "location": p.author_location_raw, "year": p.source_year,
            }, sort_keys=True, ensure_ascii=False) + "\n")
    (out_dir / "ingest_errors.json").write_text(json.dumps(
        [{"line": e.line_number, "reason": e.reason} for e in result.errors],
        indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def _cmd_agree(config, out_dir, manifest):
    cfg = config["agree"]
    sets = annotation.load_annotations(cfg["annotations"])
    manifest.add_input(cfg["annotations"])
    report = annotation.agreement_report(sets, expert=cfg.get("expert"))
    annotation.save_report(report, out_dir / "agreement_report.json")
    return 0


def _cmd_topics(config, out_dir, manifest):
    cfg = config["topics"]
    result = corpus.load_posts(cfg["posts"])
    manifest.add_input(cfg["posts"])
    manifest.add_input(cfg["embeddings"])
    store = dict(np.load(cfg["embeddings"]))
    posts = [p for p in result.posts if p.id in store]
    embeddings = topics.embed_posts(posts, topics.RecordedEmbedder(store))
    tm_config = topics.TopicModelConfig(
        neighborhood_size=int(cfg.get("neighborhood_size", 15)),
        reduced_dims=int(cfg.get("reduced_dims", 5)))
    fitted = topics.fit_topics(
        embeddings, [p.text for p in posts], [p.id for p in posts], tm_config)
    target = cfg.get("target_topics")
    if target:
        texts_by_id = {p.id: p.text for p in posts}
        fitted = topics.reduce_topics(fitted, int(target), texts_by_id, tm_config)
    topics.save_topic_report(fitted, out_dir / "topic_report.json")
    return 0


def _cmd_train(config, out_dir, manifest, seed):
    import torch

    from . import classifiers

    cfg = config["train"]
    manifest.add_input(cfg["features"])
    data = np.load(cfg["features"])
    text = torch.tensor(data["text"], dtype=torch.float32)
    image = torch.tensor(data["image"], dtype=torch.float32)
    labels = torch.tensor(data["labels"], dtype=torch.long)
    model_cfg = classifiers.FusionModelConfig(**config.get("model", {}))
    train_cfg = classifiers.TrainConfig(seed=seed, **config.get("training", {}))
    split_cfg = config.get("split", {})
    spec = corpus.SplitSpec(seed=seed,
                            train_fraction=float(split_cfg.get("train_fraction", 0.8)))
    keys = [str(int(l)) for l in labels]
    train_idx, test_idx = corpus.stratified_indices(keys, spec)
    # validation: 10% stratified carve-out from train
    val_spec = corpus.SplitSpec(seed=seed, train_fraction=0.9)
    inner_train, inner_val = corpus.stratified_indices(
        [keys[i] for i in train_idx], val_spec)
    tr = [train_idx[i] for i in inner_train]
    va = [train_idx[i] for i in inner_val]
    model = classifiers.build_fusion_model(model_cfg, seed=seed)
    model, history = classifiers.train(
        model,
        (text[tr], image[tr], labels[tr]),
        (text[va], image[va], labels[va]),
        train_cfg)
    torch.save({"config": config.get("model", {}), "state_dict": model.state_dict(),
                "history": vars(history), "seed": seed},
               out_dir / "checkpoint.pt")
    preds = model(text[test_idx], image[test_idx]).argmax(dim=1) if test_idx else None
    with (out_dir / "test_predictions.jsonl").open("w", encoding="utf-8") as fh:
        order = taxonomy.canonical_order()
        for pos, i in enumerate(test_idx):
            fh.write(json.dumps({
                "id": str(data["ids"][i]) if "ids" in data else str(i),
                "truth": order[int(labels[i])].name,
                "pred": order[int(preds[pos])].name,
            }, sort_keys=True) + "\n")
    (out_dir / "history.json").write_text(
        json.dumps(vars(history), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def _cmd_eval(config, out_dir, manifest):
    cfg = config["eval"]
    seeds = [int(s) for s in cfg.get("seeds", list(corpus.CANONICAL_SPLIT_SEEDS))]
    reports = []
    for i, path in enumerate(cfg["predictions"]):
        manifest.add_input(path)
        rows = _load_labeled_jsonl(path)
        truth = [taxonomy.label_from_name(r["truth"]) for r in rows]
        pred = [evaluation.UNPARSEABLE if r["pred"] == evaluation.UNPARSEABLE
                else taxonomy.label_from_name(r["pred"]) for r in rows]
        report = evaluation.evaluate(truth, pred)
        evaluation.save_report(report, out_dir / f"report_{i}.json")
        reports.append(report)
    agg = evaluation.aggregate_runs(reports, seeds[: len(reports)])
    evaluation.save_aggregate(agg, out_dir / "aggregate.json")
    return 0


def _cmd_zeroshot(config, out_dir, manifest):
    cfg = config["zeroshot"]
    result = corpus.load_posts(cfg["posts"])
    manifest.add_input(cfg["posts"])
    manifest.add_input(cfg["responses"])
    client = zeroshot.RecordedResponseClient.from_file(cfg["responses"])
    settings = zeroshot.VlmSettings(
        temperature=float(cfg.get("temperature", 0.1)),
        num_beams=int(cfg.get("num_beams", 1)),
        max_new_tokens=int(cfg.get("max_new_tokens", 1024)))
    results = zeroshot.classify_zeroshot(result.posts, client, settings)
    zeroshot.save_response_log(results, out_dir / "responses.jsonl")
    return 0


def _cmd_trends(config, out_dir, manifest):
    cfg = config["trends"]
    result = corpus.load_posts(cfg["posts"])
    manifest.add_input(cfg["posts"])
    manifest.add_input(cfg["gazetteer"])
    gaz = trends.Gazetteer.from_file(cfg["gazetteer"])
    year = int(cfg["year"])
    posts = result.posts
    total = trends.weekly_counts(posts, year)
    trends.save_series(total, out_dir / f"weekly_total_{year}.csv")
    dist = trends.province_distribution(posts, gaz)
    (out_dir / "province_distribution.json").write_text(
        json.dumps(dist, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    meta = trends.series_metadata(total)
    if cfg.get("predictions"):
        manifest.add_input(cfg["predictions"])
        rows = _load_labeled_jsonl(cfg["predictions"])
        label_by_id = {r["id"]: taxonomy.label_from_name(r["label"]) for r in rows}
        predicted = [(p, label_by_id[p.id]) for p in posts if p.id in label_by_id]
        wanted = cfg.get("classes") or taxonomy.class_names()
        classes = [taxonomy.label_from_name(n) for n in wanted]
        for series in trends.class_trend_series(predicted, year, classes):
            safe = series.class_label.letter
            trends.save_series(series, out_dir / f"weekly_class_{safe}_{year}.csv")
    (out_dir / "trend_metadata.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def _fail(out_dir: Path, errors: list[str]) -> int:
    report = {"status": "error", "violations": errors}
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "error_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps(report), file=sys.stderr)
    return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="triage", description=__doc__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default="out")
    args = parser.parse_args(argv)

    out_dir = Path(args.out)
    config_path = Path(args.config)
    if not config_path.exists():
        return _fail(out_dir, [f"config: file not found: {config_path}"])
    try:
        config = yaml.safe_load(config_path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        return _fail(out_dir, [f"config: parse error: {exc}"])
    if args.seed is not None:  # flags win over the config file
        config["seed"] = args.seed
    seed = int(config.get("seed", 8))

    violations = validate_config(config, args.command)
    if violations:
        return _fail(out_dir, violations)

    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(command=args.command, config_hash=config_hash(config),
                           seeds=[seed])
    try:
        if args.command == "ingest":
            status = _cmd_ingest(config, out_dir, manifest)
        elif args.command == "agree":
            status = _cmd_agree(config, out_dir, manifest)
        elif args.command == "topics":
            status = _cmd_topics(config, out_dir, manifest)
        elif args.command == "train":
            status = _cmd_train(config, out_dir, manifest, seed)
        elif args.command == "eval":
            status = _cmd_eval(config, out_dir, manifest)
        elif args.command == "zeroshot":
            status = _cmd_zeroshot(config, out_dir, manifest)
        else:
            status = _cmd_trends(config, out_dir, manifest)
    except Exception as exc:  # data errors become a machine-readable report
        return _fail(out_dir, [f"{args.command}: {exc}"])
    manifest.save(out_dir)
    return status


if __name__ == "__main__":
    sys.exit(main())
