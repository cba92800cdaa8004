#!/usr/bin/env python3
"""Run every pipeline command end-to-end on the shipped test fixtures.

Writes all artifacts under --out (default: demo_out/) and prints the path
of each report it produced. Useful as a smoke test of an installation and
as a worked example of the per-command config layout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from wildfire_triage.cli import main as triage_main

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def run(command: str, config: dict, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.yaml"
    cfg_path.write_text(yaml.safe_dump(config), encoding="utf-8")
    code = triage_main([command, "--config", str(cfg_path), "--out", str(out)])
    if code != 0:
        sys.exit(f"{command} failed with exit code {code}; see {out}")
    for artifact in sorted(out.iterdir()):
        if artifact.name != "config.yaml":
            print(f"{command}: {artifact}")


def synthetic_features(path: Path, n_per_class: int = 8, seed: int = 0) -> Path:
    rng = np.random.default_rng(seed)
    n = n_per_class * 13
    labels = np.repeat(np.arange(13), n_per_class)
    # class-aligned directions so a short training run visibly learns
    dirs_t = rng.normal(size=(13, 768))
    dirs_i = rng.normal(size=(13, 768))
    text = 20.0 * dirs_t[labels] + rng.normal(size=(n, 768))
    image = 20.0 * dirs_i[labels] + rng.normal(size=(n, 768))
    np.savez(path, text=text, image=image, labels=labels,
             ids=np.array([f"demo{i}" for i in range(n)]))
    return path


def synthetic_embeddings(path: Path, posts_path: Path, seed: int = 1) -> Path:
    rng = np.random.default_rng(seed)
    store = {}
    with posts_path.open(encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            center = np.zeros(32)
            center[i % 2] = 6.0
            store[json.loads(line)["id"]] = center + rng.normal(scale=0.1, size=32)
    np.savez(path, **store)
    return path


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo_out")
    args = parser.parse_args()
    base = Path(args.out)
    base.mkdir(parents=True, exist_ok=True)

    run("ingest", {"ingest": {"posts": str(FIXTURES / "posts_50.jsonl")}},
        base / "ingest")
    run("agree", {"agree": {"annotations": str(FIXTURES / "annotations_200.jsonl")}},
        base / "agree")
    emb = synthetic_embeddings(base / "embeddings.npz", FIXTURES / "posts_50.jsonl")
    run("topics", {"topics": {"posts": str(FIXTURES / "posts_50.jsonl"),
                              "embeddings": str(emb),
                              "neighborhood_size": 5, "reduced_dims": 2}},
        base / "topics")
    feats = synthetic_features(base / "features.npz")
    run("train", {"train": {"features": str(feats)},
                  "model": {"proj_dim": 64, "heads": 4, "ffn_dim": 128,
                            "head_hidden": 32},
                  "training": {"epochs": 3, "batch_size": 8},
                  "seed": 8},
        base / "train")
    run("eval", {"eval": {"predictions":
                          [str(base / "train" / "test_predictions.jsonl")],
                          "seeds": [8]}},
        base / "eval")
    run("zeroshot", {"zeroshot": {
        "posts": str(FIXTURES / "posts_50.jsonl"),
        "responses": str(FIXTURES / "zeroshot_responses_50.jsonl")}},
        base / "zeroshot")
    run("trends", {"trends": {"posts": str(FIXTURES / "posts_50.jsonl"),
                              "gazetteer": str(FIXTURES / "gazetteer.csv"),
                              "year": 2023}},
        base / "trends")
    print(f"\nAll commands completed; artifacts under {base}/")


if __name__ == "__main__":
    main()
