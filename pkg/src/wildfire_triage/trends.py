"""Retrospective trend analysis: location resolution and weekly series.

Location resolution uses an offline gazetteer file instead of a live
geocoding service so runs stay hermetic. Weekly series are Monday-anchored
7-day bins labeled by their start date.
"""

from __future__ import annotations

import csv
import json
import re
import unicodedata
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from typing import Optional, Sequence

from .corpus import Post
from .taxonomy import ClassLabel, class_names

NOT_FOUND = "NOT_FOUND"
NOT_CANADA = "NOT_CANADA"

PROVINCE_CODES = frozenset(
    ["AB", "BC", "MB", "NB", "NL", "NS", "NT", "NU", "ON", "PE", "QC", "SK", "YT"])


class TrendsError(Exception):
    pass


@dataclass(frozen=True)
class GazetteerEntry:
    name: str
    aliases: frozenset[str]
    province: str
    country: str


@dataclass
class TrendSeries:
    year: int
    class_label: Optional[ClassLabel]
    buckets: list[tuple[date, int]]


def normalize_place(raw: str) -> str:
    """Casefold, trim, strip punctuation, collapse whitespace."""
    text = unicodedata.normalize("NFKC", raw).casefold()
    text = re.sub(r"[^\w\s]", " ", text)
    return re.sub(r"\s+", " ", text).strip()


class Gazetteer:
    def __init__(self, entries: Sequence[GazetteerEntry]):
        self.entries = list(entries)
        self._index: dict[str, GazetteerEntry] = {}
        for entry in entries:
            for key in {entry.name, *entry.aliases}:
                norm = normalize_place(key)
                if norm and norm not in self._index:
                    self._index[norm] = entry

    @classmethod
    def from_file(cls, path: str | Path) -> "Gazetteer":
        """Delimited text with header {name, aliases, province, country};
        aliases separated by '|'."""
        entries = []
        with Path(path).open(encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                province = (row.get("province") or "").strip().upper()
                if province and province not in PROVINCE_CODES:
                    raise TrendsError(f"invalid province code {province!r} for {row['name']!r}")
                aliases = frozenset(
                    a.strip() for a in (row.get("aliases") or "").split("|") if a.strip())
                entries.append(GazetteerEntry(
                    name=row["name"].strip(), aliases=aliases,
                    province=province, country=(row.get("country") or "").strip()))
        return cls(entries)

    def lookup(self, normalized: str) -> Optional[GazetteerEntry]:
        return self._index.get(normalized)


def resolve_location(raw: Optional[str], gazetteer: Gazetteer) -> str:
    """Province code for a Canadian match, NOT_CANADA for a foreign one,
    NOT_FOUND otherwise. Matching tries the full string then comma parts."""
    if not raw or not raw.strip():
        return NOT_FOUND
    candidates = [raw] + [part for part in raw.split(",")]
    for candidate in candidates:
        norm = normalize_place(candidate)
        if not norm:
            continue
        entry = gazetteer.lookup(norm)
        if entry is None:
            continue
        if entry.country.casefold() == "canada" and entry.province:
            return entry.province
        return NOT_CANADA
    return NOT_FOUND


def _week_start(year: int) -> date:
    jan1 = date(year, 1, 1)
    return jan1 - timedelta(days=jan1.weekday())  # Monday on or before Jan 1


def _week_index(anchor: date, when: datetime) -> int:
    return (when.astimezone(timezone.utc).date() - anchor).days // 7


def _year_buckets(year: int) -> list[date]:
    anchor = _week_start(year)
    starts = []
    current = anchor
    while current <= date(year, 12, 31):
        starts.append(current)
        current += timedelta(days=7)
    return starts


def weekly_counts(posts: Sequence[Post], year: int) -> TrendSeries:
    """Total posts per Monday-anchored week; only timestamps in `year` count."""
    starts = _year_buckets(year)
    anchor = starts[0]
    counts = [0] * len(starts)
    for post in posts:
        if post.created_at.astimezone(timezone.utc).year != year:
            continue
        counts[_week_index(anchor, post.created_at)] += 1
    return TrendSeries(year=year, class_label=None,
                       buckets=list(zip(starts, counts)))


def class_trend_series(predicted: Sequence[tuple[Post, ClassLabel]], year: int,
                       classes: Sequence[ClassLabel]) -> list[TrendSeries]:
    """One weekly series per requested class over classifier predictions."""
    known = set(class_names())
    for c in classes:
        if c.name not in known:
            raise TrendsError(f"unknown class {c.name!r}")
    starts = _year_buckets(year)
    anchor = starts[0]
    series = []
    for c in classes:
        counts = [0] * len(starts)
        for post, label in predicted:
            if label.name != c.name:
                continue
            if post.created_at.astimezone(timezone.utc).year != year:
                continue
            counts[_week_index(anchor, post.created_at)] += 1
        series.append(TrendSeries(year=year, class_label=c,
                                  buckets=list(zip(starts, counts))))
    return series


def province_distribution(posts: Sequence[Post], gazetteer: Gazetteer) -> dict[str, int]:
    """Counts by resolved province (plus NOT_FOUND / NOT_CANADA); partitions input."""
    counts: dict[str, int] = {}
    for post in posts:
        key = resolve_location(post.author_location_raw, gazetteer)
        counts[key] = counts.get(key, 0) + 1
    return counts


def save_series(series: TrendSeries, path: str | Path) -> None:
    """CSV of ISO-8601 week-start dates and counts, with binning metadata."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["week_start", "count"])
        for start, count in series.buckets:
            writer.writerow([start.isoformat(), count])


def series_metadata(series: TrendSeries) -> dict:
    return {
        "year": series.year,
        "class": series.class_label.name if series.class_label else None,
        "week_anchor": "monday-on-or-before-jan-1",
        "bin_days": 7,
    }
