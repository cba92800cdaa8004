"""Zero-shot VLM classification harness.

One fixed prompt pair for every backend, single-letter answer parsing,
and a backend-agnostic client interface with a recorded-response
implementation so evaluation runs need no GPU or paid API.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence, Union

from .corpus import Post
from .evaluation import UNPARSEABLE
from .taxonomy import ClassLabel, label_from_letter

SYSTEM_PROMPT = (
    "You are an assistant who is being given an image and text pair as a Twitter post, "
    "which was created during a natural disaster event. Your task is to use information "
    "from both the text and the image to decide which option the post should be labeled as. "
    "You must pay close attention to each option when deciding which label to use."
)

USER_PROMPT = "\n".join([
    "Which option should this post be labeled as?",
    "A. Evacuees (information relating to evacuees, their movements, needs, location, etc)",
    "B. General Information (GENERAL facts about the wildfire situation, hectares burned)",
    "C. Preparedness (information for the general public to prepare themselves and property for wildfires)",
    "D. Weather Reports (information relating to the weather, satellite imagery, radar imagery)",
    "E. Warnings & Status Updates (warnings/updates to the public from authoritative bodies, fire bans, specific information relating to a certain time or area)",
    "F. Reports of Actions of Responders (prescribed burns, responders responding to a specific location)",
    "G. Infrastructure (road closures, damaged buildings or property, traffic)",
    "H. Political (mentions of political or public figures or parties)",
    "I. Insurance (mentions of insurance)",
    "J. Advertisement (information about restaurants, food, apps or services)",
    "K. Smoke & Air Quality (information about smoke or air quality, masks, breathing)",
    "L. Support (information about financial, mental health, or other types of support for people)",
    "M. Other (the post does not fit well in one of the previous categories)",
    "You may only answer with the chosen option's letter.",
])


@dataclass(frozen=True)
class PromptPair:
    system: str
    user: str


@dataclass(frozen=True)
class VlmSettings:
    temperature: float = 0.1
    num_beams: int = 1
    max_new_tokens: int = 1024


@dataclass(frozen=True)
class BackendSpec:
    """Named adapter config: endpoint, auth env var, free-text quantization note."""
    name: str
    endpoint: str = ""
    auth_env: str = ""
    quantization: str = ""


BACKENDS = {
    "gpt-4o-mini": BackendSpec("gpt-4o-mini", endpoint="https://api.openai.com/v1",
                               auth_env="OPENAI_API_KEY", quantization="none (hosted)"),
    "llava-v1.5-13b": BackendSpec("llava-v1.5-13b", quantization="4-bit"),
    "qwen2.5-vl-7b": BackendSpec("qwen2.5-vl-7b", quantization="4-bit (bitsandbytes)"),
    "smolvlm-2b": BackendSpec("smolvlm-2b", quantization="none"),
}


@dataclass
class ZeroShotResult:
    post_id: str
    label: Union[ClassLabel, str]  # ClassLabel or UNPARSEABLE
    raw: str
    error: Optional[str] = None
    retries: int = 0


class TransportError(Exception):
    """Backend unreachable or request failed in transit; retried."""


class VlmClient(Protocol):
    def classify(self, post: Post, prompt: PromptPair, settings: VlmSettings) -> str:
        """Raw model response for one post."""


class RecordedResponseClient:
    """Replays raw responses keyed by post id from a JSONL fixture."""

    def __init__(self, responses: dict[str, str]):
        self.responses = responses

    @classmethod
    def from_file(cls, path: str | Path) -> "RecordedResponseClient":
        responses = {}
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rec = json.loads(line)
                    responses[str(rec["post_id"])] = str(rec["raw"])
        return cls(responses)

    def classify(self, post, prompt, settings):
        if post.id not in self.responses:
            raise TransportError(f"no recorded response for post {post.id}")
        return self.responses[post.id]


def build_prompt() -> PromptPair:
    """The fixed system/user prompt pair; identical for every backend and post."""
    return PromptPair(system=SYSTEM_PROMPT, user=USER_PROMPT)


_ANSWER_RE = re.compile(r"^([A-Za-z])[.)]?$")


def parse_response(raw: str) -> Union[ClassLabel, str]:
    """Single leading letter A-M, case-insensitive, optional '.' or ')'.

    Anything else is UNPARSEABLE, which downstream metrics score as wrong.
    """
    cleaned = raw.strip().strip("\"'").strip()
    match = _ANSWER_RE.match(cleaned)
    if not match:
        return UNPARSEABLE
    letter = match.group(1).upper()
    if not "A" <= letter <= "M":
        return UNPARSEABLE
    return label_from_letter(letter)


def classify_zeroshot(posts: Sequence[Post], client: VlmClient,
                      settings: VlmSettings | None = None,
                      max_retries: int = 2) -> list[ZeroShotResult]:
    """Classify each post, preserving order; transport failures are retried
    then recorded per-post without aborting the run."""
    settings = settings or VlmSettings()
    prompt = build_prompt()
    results = []
    for post in posts:
        raw = ""
        error = None
        retries = 0
        while True:
            try:
                raw = client.classify(post, prompt, settings)
                break
            except TransportError as exc:
                if retries >= max_retries:
                    error = str(exc)
                    break
                retries += 1
        label = parse_response(raw) if error is None else UNPARSEABLE
        results.append(ZeroShotResult(post.id, label, raw, error=error, retries=retries))
    return results


def save_response_log(results: Sequence[ZeroShotResult], path: str | Path) -> None:
    """One line per post: {post_id, raw, parsed_letter}; raw kept verbatim."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in results:
            parsed = r.label.letter if isinstance(r.label, ClassLabel) else UNPARSEABLE
            fh.write(json.dumps(
                {"post_id": r.post_id, "raw": r.raw, "parsed_letter": parsed},
                sort_keys=True, ensure_ascii=False) + "\n")
