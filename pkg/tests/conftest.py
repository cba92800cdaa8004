from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

import pytest

from wildfire_triage.corpus import Post

FIXTURES = Path(__file__).resolve().parent / "fixtures"


def make_post(pid: str, text: str = "", when: str = "2023-06-05T12:00:00+00:00",
              location: str | None = None, year: int = 2023, image: str = "") -> Post:
    return Post(id=pid, text=text, image_path=image,
                created_at=datetime.fromisoformat(when).astimezone(timezone.utc),
                author_location_raw=location, source_year=year)


def write_jsonl(path: Path, rows: list[dict]) -> Path:
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return path


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
