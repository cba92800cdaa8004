from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, make_post
from wildfire_triage import taxonomy
from wildfire_triage.trends import (NOT_CANADA, NOT_FOUND, Gazetteer,
                                    TrendsError, class_trend_series,
                                    province_distribution, resolve_location,
                                    weekly_counts)


@pytest.fixture(scope="module")
def gazetteer():
    return Gazetteer.from_file(FIXTURES / "gazetteer.csv")


class TestResolveLocation:
    def test_empty_and_none(self, gazetteer):
        assert resolve_location(None, gazetteer) == NOT_FOUND
        assert resolve_location("", gazetteer) == NOT_FOUND
        assert resolve_location("   ", gazetteer) == NOT_FOUND

    def test_canadian_city(self, gazetteer):
        assert resolve_location("Kelowna, BC", gazetteer) == "BC"
        assert resolve_location("kelowna", gazetteer) == "BC"
        assert resolve_location("West Kelowna", gazetteer) == "BC"

    def test_foreign_match(self, gazetteer):
        assert resolve_location("Paris, France", gazetteer) == NOT_CANADA
        assert resolve_location("Seattle, WA", gazetteer) == NOT_CANADA

    def test_unknown(self, gazetteer):
        assert resolve_location("Middle of Nowhere", gazetteer) == NOT_FOUND

    def test_normalization(self, gazetteer):
        assert resolve_location("  CALGARY!! ", gazetteer) == "AB"
        assert resolve_location("Montréal", gazetteer) == "QC"

    def test_alias_lookup(self, gazetteer):
        assert resolve_location("yyc", gazetteer) == "AB"
        assert resolve_location("the 6ix", gazetteer) == "ON"

    def test_deterministic(self, gazetteer):
        values = {resolve_location("Jasper, AB", gazetteer) for _ in range(5)}
        assert values == {"AB"}


class TestWeeklyCounts:
    def test_empty_year_all_zero(self):
        series = weekly_counts([], 2023)
        assert all(c == 0 for _, c in series.buckets)
        assert series.buckets[0][0] == date(2022, 12, 26)  # Monday before Jan 1 2023
        assert series.buckets[-1][0] <= date(2023, 12, 31)

    def test_same_day_posts_share_week(self):
        posts = [make_post(f"p{i}", when="2023-06-07T10:00:00+00:00") for i in range(3)]
        series = weekly_counts(posts, 2023)
        week = dict(series.buckets)
        assert week[date(2023, 6, 5)] == 3
        assert sum(week.values()) == 3

    def test_hand_tally_fixture(self):
        spec = {"2023-01-02": 4, "2023-06-05": 7, "2023-06-12": 3,
                "2023-08-14": 5, "2023-12-25": 1}
        posts = []
        i = 0
        for day, count in spec.items():
            for _ in range(count):
                posts.append(make_post(f"p{i}", when=f"{day}T08:00:00+00:00"))
                i += 1
        series = weekly_counts(posts, 2023)
        week = dict(series.buckets)
        for day, count in spec.items():
            assert week[date.fromisoformat(day)] == count
        assert sum(week.values()) == 20

    def test_posts_outside_year_excluded(self):
        posts = [make_post("old", when="2022-06-05T00:00:00+00:00"),
                 make_post("new", when="2023-06-05T00:00:00+00:00")]
        series = weekly_counts(posts, 2023)
        assert sum(c for _, c in series.buckets) == 1

    def test_buckets_strictly_weekly(self):
        series = weekly_counts([], 2024)
        starts = [d for d, _ in series.buckets]
        assert all((b - a).days == 7 for a, b in zip(starts, starts[1:]))
        assert all(d.weekday() == 0 for d in starts)


def labeled_posts(spec):
    """spec: list of (date string, letter)."""
    out = []
    for i, (day, letter) in enumerate(spec):
        out.append((make_post(f"p{i}", when=f"{day}T12:00:00+00:00"),
                    taxonomy.label_from_letter(letter)))
    return out


class TestClassTrendSeries:
    def test_single_class_equals_totals(self):
        predicted = labeled_posts([("2023-06-05", "A")] * 5 + [("2023-08-14", "A")] * 2)
        series = class_trend_series(predicted, 2023, [taxonomy.label_from_letter("A")])
        totals = weekly_counts([p for p, _ in predicted], 2023)
        assert series[0].buckets == totals.buckets

    def test_constructed_spike_week_is_argmax(self):
        quiet = [("2023-05-01", "A"), ("2023-07-03", "A")]
        spike = [("2023-08-16", "A")] * 10
        other = [("2023-08-16", "K")] * 3
        series = class_trend_series(labeled_posts(quiet + spike + other), 2023,
                                    [taxonomy.label_from_letter("A")])
        buckets = series[0].buckets
        best = max(buckets, key=lambda b: b[1])
        assert best[0] == date(2023, 8, 14)
        assert best[1] == 10

    def test_partition_identity_all_classes(self):
        spec = [("2023-06-05", l) for l in "AAKKEEMBCD"] + \
               [("2023-08-14", l) for l in "KKKEEA"]
        predicted = labeled_posts(spec)
        all_series = class_trend_series(predicted, 2023, taxonomy.canonical_order())
        totals = weekly_counts([p for p, _ in predicted], 2023)
        for i, (start, total) in enumerate(totals.buckets):
            col_sum = sum(s.buckets[i][1] for s in all_series)
            assert col_sum == total, start

    def test_unknown_class_rejected(self):
        from wildfire_triage.taxonomy import ClassLabel
        bogus = ClassLabel("Z", "Nonexistent", "", 0)
        with pytest.raises(TrendsError):
            class_trend_series([], 2023, [bogus])


class TestProvinceDistribution:
    def test_empty(self, gazetteer):
        assert province_distribution([], gazetteer) == {}

    def test_hand_built_fixture(self, gazetteer):
        posts = ([make_post(f"b{i}", location="Vancouver, BC") for i in range(6)] +
                 [make_post(f"a{i}", location="Calgary") for i in range(3)] +
                 [make_post("u0", location="Atlantis")])
        dist = province_distribution(posts, gazetteer)
        assert dist == {"BC": 6, "AB": 3, NOT_FOUND: 1}

    @given(locations=st.lists(st.sampled_from(
        ["Kelowna", "Calgary", "Paris, France", "nowhere", None]), max_size=40))
    @settings(max_examples=50)
    def test_counts_partition_input(self, locations, gazetteer):
        posts = [make_post(f"p{i}", location=loc) for i, loc in enumerate(locations)]
        dist = province_distribution(posts, gazetteer)
        assert sum(dist.values()) == len(posts)
