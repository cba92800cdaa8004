"""Canonical 13-class labeling scheme for wildfire social-media posts.

Twelve informative categories plus Other. Each class carries a single
letter (A-M) used by the zero-shot prompt and as the canonical axis
order for confusion matrices, plus a reference sample count from the
source dataset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class UnknownLabelError(ValueError):
    """Raised when a letter or name does not map to a taxonomy class."""


@dataclass(frozen=True)
class ClassLabel:
    letter: str
    name: str
    description: str
    reference_count: int


# Letter order follows the classification prompt; reference counts are
# read-only dataset metadata and must never influence classifier behavior.
_CLASSES: tuple[ClassLabel, ...] = (
    ClassLabel("A", "Evacuees",
               "Information relating to evacuees, their movements, needs, location.", 252),
    ClassLabel("B", "General Information",
               "General info about the wildfire situation, such as total hectares burned.", 170),
    ClassLabel("C", "Preparedness",
               "Information for the general public to prepare themselves and their property.", 264),
    ClassLabel("D", "Weather Reports",
               "Information relating to the weather with a specific location mentioned.", 296),
    ClassLabel("E", "Warnings & Status Updates",
               "Fire bans in certain areas, new information about a specific area, updates from officials.", 669),
    ClassLabel("F", "Reports of Actions of Responders",
               "Actions of responders within specific areas or times, including prescribed burns.", 356),
    ClassLabel("G", "Infrastructure",
               "Detours, road closures, damage to infrastructure (e.g., utility poles, highways), repairs by crews.", 264),
    ClassLabel("H", "Political",
               "Posts directed towards political figures or parties (excluding situation updates).", 329),
    ClassLabel("I", "Insurance",
               "Information relating to insurance, employment insurance, and EI benefits.", 158),
    ClassLabel("J", "Advertisement",
               "Posts about food, restaurants, off-topic ads for services (e.g., apps, air purifiers, not insurance-related).", 117),
    ClassLabel("K", "Smoke and Air Quality",
               "Tweets related to or showing signs of smoke or the current air quality.", 1128),
    ClassLabel("L", "Support",
               "Mental health and financial support, temporary housing for livestock.", 178),
    ClassLabel("M", "Other",
               "No 'useful' information, focusing on images (e.g., scenery), general complaining, or irrelevant content.", 507),
)

_BY_LETTER = {c.letter: c for c in _CLASSES}
_BY_NAME = {c.name: c for c in _CLASSES}

NUM_CLASSES = len(_CLASSES)
TOTAL_REFERENCE_COUNT = sum(c.reference_count for c in _CLASSES)


def canonical_order() -> list[ClassLabel]:
    """All 13 classes in canonical A-M order."""
    return list(_CLASSES)


def label_from_letter(letter: str) -> ClassLabel:
    """Map a single letter A-M (case-insensitive) to its class."""
    key = letter.strip().upper()
    if key not in _BY_LETTER:
        raise UnknownLabelError(f"no class for letter {letter!r}; expected A-M")
    return _BY_LETTER[key]


def label_from_name(name: str) -> ClassLabel:
    if name not in _BY_NAME:
        raise UnknownLabelError(f"no class named {name!r}")
    return _BY_NAME[name]


def letter_from_label(label: ClassLabel) -> str:
    return label.letter


def index_of(label: ClassLabel) -> int:
    """Position of a class on the canonical A-M axis."""
    return ord(label.letter) - ord("A")


def class_names() -> list[str]:
    return [c.name for c in _CLASSES]


def save_taxonomy(path: str | Path) -> None:
    """Serialize the taxonomy so downstream tools can render legends."""
    payload = {
        "classes": [
            {
                "letter": c.letter,
                "name": c.name,
                "description": c.description,
                "reference_count": c.reference_count,
            }
            for c in _CLASSES
        ],
        "total_reference_count": TOTAL_REFERENCE_COUNT,
    }
    Path(path).write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
