#!/usr/bin/env python3
"""Regenerate the shipped test fixtures.

Golden agreement values are computed here with independent brute-force
formulas (contingency-table Cohen, direct-formula Fleiss), not with the
package under test.
"""

from __future__ import annotations

import json
import sys
from collections import Counter
from pathlib import Path

import numpy as np

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

CLASS_NAMES = [
    "Evacuees", "General Information", "Preparedness", "Weather Reports",
    "Warnings & Status Updates", "Reports of Actions of Responders",
    "Infrastructure", "Political", "Insurance", "Advertisement",
    "Smoke and Air Quality", "Support", "Other",
]
LETTERS = "ABCDEFGHIJKLM"


def cohen(a, b):
    labels = sorted({*a, *b})
    idx = {l: i for i, l in enumerate(labels)}
    table = np.zeros((len(labels), len(labels)))
    for x, y in zip(a, b):
        table[idx[x], idx[y]] += 1
    n = table.sum()
    p_o = np.trace(table) / n
    p_e = float(np.dot(table.sum(axis=1) / n, table.sum(axis=0) / n))
    return 1.0 if p_e == 1.0 else (p_o - p_e) / (1.0 - p_e)


def fleiss(table):
    cats = sorted({x for row in table for x in row})
    n_items, n_raters = len(table), len(table[0])
    counts = np.array([[row.count(c) for c in cats] for row in table], dtype=float)
    p_j = counts.sum(axis=0) / (n_items * n_raters)
    p_bar = (((counts ** 2).sum(axis=1) - n_raters) / (n_raters * (n_raters - 1))).mean()
    p_e = float((p_j ** 2).sum())
    return 1.0 if p_e == 1.0 else (p_bar - p_e) / (1.0 - p_e)


def make_annotations():
    rng = np.random.RandomState(42)
    annotators = ["1", "2", "3"]
    rows = []
    votes_per_item = []
    for i in range(200):
        base = CLASS_NAMES[rng.randint(len(CLASS_NAMES))]
        votes = []
        for annot in annotators:
            if rng.rand() < 0.7:
                votes.append(base)
            else:
                votes.append(CLASS_NAMES[rng.randint(len(CLASS_NAMES))])
        votes_per_item.append(votes)
        for annot, label in zip(annotators, votes):
            flags = ["personal-information"] if rng.rand() < 0.02 and annot == "1" else []
            rows.append({"post_id": f"p{i:04d}", "annotator_id": annot,
                         "label": label, "flags": flags})
    with (FIXTURES / "annotations_200.jsonl").open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")

    # golden report, computed independently
    n = len(votes_per_item)
    majority = sum(1 for v in votes_per_item if Counter(v).most_common(1)[0][1] >= 2)
    full = sum(1 for v in votes_per_item if len(set(v)) == 1)
    voted = []
    for v in votes_per_item:
        name, top = Counter(v).most_common(1)[0]
        voted.append(name if top >= 2 else v[0])  # expert = annotator 1
    golden = {
        "n_items": n,
        "rows": [
            {"metric": "Majority Agreement (2 same)", "value": majority / n},
            {"metric": "Full Agreement (all same)", "value": full / n},
        ],
    }
    for j, annot in enumerate(annotators):
        rate = sum(1 for v, w in zip(votes_per_item, voted) if v[j] == w) / n
        golden["rows"].append(
            {"metric": f"Vote between all/annotator {annot}", "value": rate})
    for j in range(3):
        for k in range(j + 1, 3):
            golden["rows"].append({
                "metric": f"Cohen's Kappa annotator {annotators[j]}-{annotators[k]}",
                "value": cohen([v[j] for v in votes_per_item],
                               [v[k] for v in votes_per_item])})
    golden["rows"].append({"metric": "Fleiss' Kappa", "value": fleiss(votes_per_item)})
    (FIXTURES / "agreement_golden.json").write_text(
        json.dumps(golden, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def make_zeroshot():
    rng = np.random.RandomState(7)
    posts = []
    responses = []
    expected = []
    for i in range(50):
        pid = f"z{i:03d}"
        posts.append({"id": pid, "text": f"post number {i}", "image": "",
                      "created_at": f"2023-06-{(i % 28) + 1:02d}T12:00:00+00:00",
                      "location": None, "year": 2023})
        if i % 10 == 9:  # malformed response every tenth item
            raw = rng.choice(["I think it's smoke", "The answer is B.", "", "N", "42"])
            expected.append("UNPARSEABLE")
        else:
            letter = LETTERS[rng.randint(13)]
            style = rng.randint(4)
            raw = {0: letter, 1: f"{letter}.", 2: f" {letter.lower()})\n",
                   3: f"{letter}\n"}[style]
            expected.append(letter)
        responses.append({"post_id": pid, "raw": raw})
    with (FIXTURES / "posts_50.jsonl").open("w", encoding="utf-8") as fh:
        for p in posts:
            fh.write(json.dumps(p, sort_keys=True) + "\n")
    with (FIXTURES / "zeroshot_responses_50.jsonl").open("w", encoding="utf-8") as fh:
        for r in responses:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    (FIXTURES / "zeroshot_expected_50.json").write_text(
        json.dumps(expected, indent=0) + "\n", encoding="utf-8")


GAZETTEER = """\
name,aliases,province,country
Kelowna,kelowna bc,BC,Canada
West Kelowna,,BC,Canada
Vancouver,vancouver bc|van city,BC,Canada
Victoria,victoria bc,BC,Canada
Calgary,calgary ab|yyc,AB,Canada
Edmonton,edmonton ab|yeg,AB,Canada
Jasper,jasper ab,AB,Canada
Fort McMurray,fort mcmurray ab,AB,Canada
Toronto,toronto on|the 6ix,ON,Canada
Ottawa,ottawa on,ON,Canada
Montreal,montreal qc|montréal,QC,Canada
Yellowknife,yellowknife nt,NT,Canada
Whitehorse,whitehorse yt,YT,Canada
Winnipeg,winnipeg mb,MB,Canada
Saskatoon,saskatoon sk,SK,Canada
British Columbia,bc,BC,Canada
Alberta,ab,AB,Canada
Ontario,on,ON,Canada
Paris,paris france,,France
Seattle,seattle wa,,United States
New York,nyc|new york ny,,United States
London,london uk,,United Kingdom
"""


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    make_annotations()
    make_zeroshot()
    (FIXTURES / "gazetteer.csv").write_text(GAZETTEER, encoding="utf-8")
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    sys.exit(main())
