"""Multi-annotator labels: adjudication and agreement statistics.

Adjudication is majority vote with an expert tie-break. Agreement metrics
cover majority/full agreement rates, voted-label-vs-annotator rates,
pairwise Cohen's kappa, and Fleiss' kappa.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .taxonomy import ClassLabel, label_from_name


class AnnotationError(Exception):
    pass


@dataclass
class AnnotationSet:
    post_id: str
    votes: list[tuple[str, ClassLabel]]
    final: Optional[ClassLabel] = None
    flags: set[str] = field(default_factory=set)

    def __post_init__(self):
        annotators = [a for a, _ in self.votes]
        if len(annotators) != len(set(annotators)):
            raise AnnotationError(f"multiple votes from one annotator on {self.post_id}")


@dataclass
class AgreementReport:
    majority_rate: float
    full_rate: float
    vote_vs_annotator: dict[str, float]
    pairwise_cohen: dict[tuple[str, str], float]
    fleiss: float
    n_items: int

    def to_rows(self) -> list[tuple[str, float]]:
        """Rows named after the agreement-statistics table layout."""
        rows = [
            ("Majority Agreement (2 same)", self.majority_rate),
            ("Full Agreement (all same)", self.full_rate),
        ]
        for annot, rate in self.vote_vs_annotator.items():
            rows.append((f"Vote between all/annotator {annot}", rate))
        for (a, b), kappa in self.pairwise_cohen.items():
            rows.append((f"Cohen's Kappa annotator {a}-{b}", kappa))
        rows.append(("Fleiss' Kappa", self.fleiss))
        return rows


def adjudicate(annotation: AnnotationSet, expert: Optional[str] = None) -> ClassLabel:
    """Strict-majority label; fall back to the expert annotator's vote.

    The expert defaults to the first annotator in the vote list.
    """
    if not annotation.votes:
        raise AnnotationError(f"no votes for {annotation.post_id}")
    counts = Counter(label.name for _, label in annotation.votes)
    name, top = counts.most_common(1)[0]
    if top * 2 > len(annotation.votes):
        return label_from_name(name)
    if expert is None:
        expert = annotation.votes[0][0]
    for annotator, label in annotation.votes:
        if annotator == expert:
            return label
    raise AnnotationError(
        f"no majority on {annotation.post_id} and expert {expert!r} did not vote")


def cohen_kappa(a: Sequence, b: Sequence) -> float:
    """Cohen's kappa between two equal-length label sequences.

    Expected agreement uses per-rater marginal label frequencies. Perfect
    agreement returns 1 by convention even when chance agreement is 1
    (single shared label).
    """
    if len(a) != len(b):
        raise AnnotationError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise AnnotationError("empty sequences")
    n = len(a)
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    freq_a = Counter(a)
    freq_b = Counter(b)
    p_e = sum(freq_a[k] * freq_b.get(k, 0) for k in freq_a) / (n * n)
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def fleiss_kappa(table: Sequence[Sequence]) -> float:
    """Fleiss' kappa over an items x raters label table.

    Every item must be rated by the same number (>= 2) of raters; 1.0 on
    total agreement.
    """
    if not table:
        raise AnnotationError("empty table")
    n_raters = len(table[0])
    if n_raters < 2:
        raise AnnotationError("need at least 2 raters per item")
    for row in table:
        if len(row) != n_raters:
            raise AnnotationError("ragged table: unequal raters per item")
    n_items = len(table)
    categories = sorted({str(lbl) for row in table for lbl in row})
    counts = [[sum(1 for lbl in row if str(lbl) == cat) for cat in categories] for row in table]
    p_j = [sum(row[j] for row in counts) / (n_items * n_raters) for j in range(len(categories))]
    p_bar = sum(
        (sum(c * c for c in row) - n_raters) / (n_raters * (n_raters - 1))
        for row in counts
    ) / n_items
    p_e = sum(p * p for p in p_j)
    if p_e == 1.0:
        return 1.0 if p_bar == 1.0 else 0.0
    return (p_bar - p_e) / (1.0 - p_e)


def agreement_report(sets: Sequence[AnnotationSet], expert: Optional[str] = None) -> AgreementReport:
    """All agreement statistics over annotation sets sharing one roster."""
    if not sets:
        raise AnnotationError("no annotation sets")
    roster = [a for a, _ in sets[0].votes]
    for s in sets:
        if [a for a, _ in s.votes] != roster:
            raise AnnotationError(f"inconsistent annotator roster on {s.post_id}")
    n = len(sets)
    n_raters = len(roster)
    majority = 0
    full = 0
    for s in sets:
        counts = Counter(label.name for _, label in s.votes)
        top = counts.most_common(1)[0][1]
        if top * 2 > n_raters:
            majority += 1
        if top == n_raters:
            full += 1
    voted = [adjudicate(s, expert=expert) for s in sets]
    vote_vs = {
        annot: sum(
            1 for s, v in zip(sets, voted)
            if dict(s.votes)[annot].name == v.name
        ) / n
        for annot in roster
    }
    pairwise: dict[tuple[str, str], float] = {}
    for i in range(n_raters):
        for j in range(i + 1, n_raters):
            a_seq = [s.votes[i][1].name for s in sets]
            b_seq = [s.votes[j][1].name for s in sets]
            pairwise[(roster[i], roster[j])] = cohen_kappa(a_seq, b_seq)
    table = [[label.name for _, label in s.votes] for s in sets]
    return AgreementReport(
        majority_rate=majority / n,
        full_rate=full / n,
        vote_vs_annotator=vote_vs,
        pairwise_cohen=pairwise,
        fleiss=fleiss_kappa(table),
        n_items=n,
    )


def load_annotations(path: str | Path) -> list[AnnotationSet]:
    """Read line-delimited {post_id, annotator_id, label, flags} records."""
    grouped: dict[str, AnnotationSet] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            pid = str(rec["post_id"])
            if pid not in grouped:
                grouped[pid] = AnnotationSet(post_id=pid, votes=[])
            grouped[pid].votes.append((str(rec["annotator_id"]), label_from_name(rec["label"])))
            grouped[pid].flags.update(rec.get("flags", []))
    return list(grouped.values())


def save_report(report: AgreementReport, path: str | Path) -> None:
    payload = {
        "n_items": report.n_items,
        "rows": [{"metric": name, "value": value} for name, value in report.to_rows()],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
