"""Post data model, JSONL ingestion, collection queries, dedup, and splits."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .taxonomy import ClassLabel

# Fixed suffix appended to every collection query, byte-exact.
QUERY_FILTER_SUFFIX = " -has:videos has:images lang:en -is:retweet -is:quote -is:reply"

# Hashtag lists per collection year. The labeled corpus used the 2022/2023
# and 2024 rows; the retrospective corpus used the per-year lists below.
LABELED_HASHTAGS: dict[str, list[str]] = {
    "2022/2023": ["#BCwildfire", "#BCfire", "#ABWildfire", "#albertawildfire", "#ABFire"],
    "2024": ["#BCwildfire", "#BCfire", "#ABWildfire", "#albertawildfire", "#ABFire",
             "#JasperStrong", "#JasperWildfire", "#JasperAB"],
}

RETROSPECTIVE_HASHTAGS: dict[int, list[str]] = {
    2018: ["#BCwildfire", "#britishcolumbiawildfire", "#BCfire", "#ABWildfire",
           "#albertawildfire", "#ABFire"],
    2019: ["#ABWildfire", "#albertawildfire", "#ABFire"],
    2020: ["#BCwildfire", "#britishcolumbiawildfire", "#BCfire", "#ABwildfire",
           "#albertawildfire", "#ABFire", "#SKwildfire", "#sasksatchewanwildfire",
           "#SKfire", "#YTwildfire", "#yukonwildfire", "#YTfire", "#NTwildfire",
           "#northwestterritorieswildfire", "#NTfire", "#NWTwildfire", "#NWTfire",
           "#MBwildfire", "#manitobawildfire", "#MBfire", "#ONwildfire",
           "#ontariowildfire", "#QCwildfire", "#quebecwildfire", "#QCfire"],
    2021: ["#MBwildfire", "#manitobawildfire", "#MBfire", "#ONwildfire",
           "#ontariowildfire", "#SKwildfire", "#sasksatchewanwildfire", "#SKfire",
           "#pafire", "#ontariofire", "#manitobafire", "#sasksatchewanfire"],
    2022: ["#YTwildfire", "#yukonwildfire", "#YTfire", "#yukonforestfire",
           "#NTwildfire", "#northwestterritorieswildfire", "#NTfire", "#NWTwildfire",
           "#NWTfire", "#nwtforestfire"],
    2023: ["#BCwildfire", "#britishcolumbiawildfire", "#BCfire", "#ABwildfire",
           "#albertawildfire", "#ABFire", "#SKwildfire", "#sasksatchewanwildfire",
           "#SKfire", "#YTwildfire", "#yukonwildfire", "#YTfire", "#NTwildfire",
           "#northwestterritorieswildfire", "#NTfire", "#NWTwildfire", "#NWTfire",
           "#MBwildfire", "#manitobawildfire", "#MBfire", "#ONwildfire",
           "#ontariowildfire", "#QCwildfire", "#quebecwildfire", "#QCfire",
           "#CanadaOnFire", "#CanadaWildfire", "#CanadaFires", "#CanadaIsOnFire"],
    2024: ["#JasperStrong", "#JasperWildfire", "#JasperAB", "#BCwildfire",
           "#britishcolumbiawildfire", "#BCfire", "#ABwildfire", "#albertawildfire",
           "#ABFire", "#CanadaOnFire", "#CanadaWildfire", "#CanadaFires",
           "#CanadaIsOnFire"],
}

# Keyword clauses paired with the retrospective hashtag queries.
RETROSPECTIVE_KEYWORDS: dict[int, str] = {
    2018: "(alberta OR british columbia OR Prince George OR Grande Praire OR Waterton"
          " OR Bulkley Nechako OR Nadina Lake OR Kootenay OR Crowsnest Pass OR Medicine Lake"
          " OR Comstock Lake OR Tugwell Creek OR Sooke OR Nanaimo Lakes OR Tweedsmuir"
          " OR Johnny Creek OR Alkali Lake OR Lutz Creek OR Shovel Lake OR Nadina Lake"
          " OR Verdun Mountain OR Silver Lake OR Tommy Lakes OR Island Lake OR Chutanli Lake)"
          " (wildfire OR forest fire)",
    2019: "(alberta OR calgary OR edson OR Fort McMurray OR Grande Prairie OR High Level"
          " OR Lac La Biche OR Whitecourt OR Steen River OR Chuckegg Creek OR Peace River"
          " OR Slave Lake OR Wood Buffalo National Park) (wildfire OR forest fire)",
    2020: "(british columbia OR alberta OR sasksatchewan OR yukon OR northwest territories"
          " OR manitoba OR ontario OR quebec) (wildfire OR forest fire)",
    2021: "(manitoba OR ontario OR sasksatchewan OR british columbia) (wildfire OR forest fire)",
    2022: "(#yzf OR #nwt OR #Yellowknife OR Yukon OR Northwest Territories OR Whitehorse"
          " OR Yellowknife OR Dawson City OR Great Slave Lake OR Norman Wells OR Inuvik"
          " OR Watson Lake OR Hay River OR Fort Smith OR Tuktoyaktuk OR Behchoko)"
          " (wildfire OR forest fire) (-alaska -Eielson -CityofNorthPole)",
    2023: "(ontario OR quebec OR sasksatchewan OR british columbia OR manitoba"
          " OR northwest territories OR yukon OR alberta) (wildfire OR forest fire)",
    2024: "(canada OR ontario OR quebec OR sasksatchewan OR manitoba OR northwest territories"
          " OR yukon OR british columbia OR alberta OR jasper) (wildfire OR forest fire)",
}

CANONICAL_SPLIT_SEEDS = (8, 12, 14)


class CorpusError(Exception):
    pass


@dataclass(frozen=True)
class Post:
    id: str
    text: str
    image_path: str
    created_at: datetime
    author_location_raw: Optional[str]
    source_year: int


@dataclass(frozen=True)
class QuerySpec:
    year: int
    hashtags: Sequence[str]
    keywords: Optional[str] = None
    filters: str = QUERY_FILTER_SUFFIX


@dataclass(frozen=True)
class SplitSpec:
    seed: int
    train_fraction: float = 0.8
    strategy: str = "stratified"


@dataclass
class IngestError:
    line_number: int
    reason: str


@dataclass
class IngestResult:
    posts: list[Post]
    errors: list[IngestError] = field(default_factory=list)


def _parse_timestamp(value: str) -> datetime:
    ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def load_posts(path: str | Path, image_root: str | Path | None = None) -> IngestResult:
    """Load posts from a UTF-8 JSONL file.

    Malformed lines become error entries with their line number instead of
    aborting the load. Duplicate ids within the file are reported and the
    later record skipped.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"post file not found: {path}")
    result = IngestResult(posts=[])
    seen_ids: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                result.errors.append(IngestError(lineno, f"invalid JSON: {exc}"))
                continue
            try:
                post_id = str(rec["id"])
                if not post_id:
                    raise ValueError("empty id")
                if post_id in seen_ids:
                    raise ValueError(f"duplicate id {post_id!r}")
                created = _parse_timestamp(str(rec["created_at"]))
                post = Post(
                    id=post_id,
                    text=str(rec.get("text", "")),
                    image_path=str(rec.get("image", "") or ""),
                    created_at=created,
                    author_location_raw=rec.get("location"),
                    source_year=int(rec["year"]),
                )
            except (KeyError, ValueError, TypeError) as exc:
                result.errors.append(IngestError(lineno, str(exc)))
                continue
            if post.image_path and image_root is not None:
                if not (Path(image_root) / post.image_path).exists():
                    result.errors.append(
                        IngestError(lineno, f"image not found under root: {post.image_path}"))
                    continue
            seen_ids.add(post.id)
            result.posts.append(post)
    return result


def build_query(spec: QuerySpec) -> str:
    """Assemble the full collection query string for one year's spec."""
    if not spec.hashtags:
        raise CorpusError("hashtag list must be non-empty")
    clause = "(" + " OR ".join(spec.hashtags) + ")"
    if spec.keywords:
        clause += " " + spec.keywords
    return clause + spec.filters


def dedupe(posts: Sequence[Post]) -> list[Post]:
    """Drop repeated ids, keeping the first occurrence; order preserved."""
    seen: set[str] = set()
    out: list[Post] = []
    for post in posts:
        if post.id in seen:
            continue
        seen.add(post.id)
        out.append(post)
    return out


def stratified_indices(class_keys: Sequence[str], spec: SplitSpec
                       ) -> tuple[list[int], list[int]]:
    """Deterministic per-class stratified split over sample indices.

    Per-class test count is round(count * (1 - train_fraction)); train and
    test are disjoint and jointly exhaustive.
    """
    if not 0 < spec.train_fraction < 1:
        raise CorpusError(f"train_fraction must be in (0,1), got {spec.train_fraction}")
    by_class: dict[str, list[int]] = {}
    for i, key in enumerate(class_keys):
        by_class.setdefault(key, []).append(i)
    for name, idxs in by_class.items():
        if len(idxs) < 2:
            raise CorpusError(f"class {name!r} has fewer than 2 samples")
    test_idx: set[int] = set()
    rng = np.random.RandomState(spec.seed)
    for name in sorted(by_class):
        idxs = np.array(by_class[name])
        n_test = int(round(len(idxs) * (1.0 - spec.train_fraction)))
        chosen = rng.permutation(len(idxs))[:n_test]
        test_idx.update(int(idxs[c]) for c in chosen)
    train = [i for i in range(len(class_keys)) if i not in test_idx]
    test = [i for i in range(len(class_keys)) if i in test_idx]
    return train, test


def stratified_split(
    labeled: Sequence[tuple[Post, ClassLabel]],
    spec: SplitSpec,
) -> tuple[list[tuple[Post, ClassLabel]], list[tuple[Post, ClassLabel]]]:
    """Stratified split of labeled posts; see stratified_indices."""
    train_idx, test_idx = stratified_indices([lbl.name for _, lbl in labeled], spec)
    return [labeled[i] for i in train_idx], [labeled[i] for i in test_idx]
