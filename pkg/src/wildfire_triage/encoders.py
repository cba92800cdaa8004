"""Text and image encoder wrappers with pooling, freezing, and a feature cache.

Backends produce per-token hidden states; pooling (CLS or masked mean) is
applied here so every backend shares the same semantics. The shipped stub
backends are deterministic and run without model downloads; adapters for
real Hugging Face checkpoints import lazily.
"""

from __future__ import annotations

import hashlib
import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

HIDDEN_WIDTH = 768

DEFAULT_TEXT_CHECKPOINT = "roberta-base"
DEFAULT_IMAGE_CHECKPOINT = "google/vit-base-patch16-384"


class EncoderError(Exception):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    modality: str  # "text" | "image"
    checkpoint: str = ""
    pooling: str = "cls"  # "cls" | "mean"
    freeze_half: bool = False
    max_text_length: int = 144
    image_size: tuple[int, int, int] = (384, 384, 3)

    def __post_init__(self):
        if self.modality not in ("text", "image"):
            raise EncoderError(f"unknown modality {self.modality!r}")
        if self.pooling not in ("cls", "mean"):
            raise EncoderError(f"unknown pooling {self.pooling!r}")
        if self.max_text_length < 1:
            raise EncoderError("max_text_length must be >= 1")


@dataclass(frozen=True)
class FeatureRecord:
    post_id: str
    text_vec: np.ndarray
    image_vec: np.ndarray
    pooling_used: tuple[str, str]


class TextBackend(Protocol):
    def hidden_states(self, texts: Sequence[str], config: EncoderConfig
                      ) -> tuple[np.ndarray, np.ndarray]:
        """(batch, seq, 768) hidden states plus (batch, seq) attention mask."""


class ImageBackend(Protocol):
    def hidden_states(self, images: np.ndarray, config: EncoderConfig) -> np.ndarray:
        """(batch, seq, 768) hidden states for resized image arrays."""


def _pool(hidden: np.ndarray, mask: np.ndarray, pooling: str) -> np.ndarray:
    if pooling == "cls":
        return hidden[:, 0, :]
    weights = mask[:, :, None].astype(np.float64)
    totals = weights.sum(axis=1)
    totals[totals == 0] = 1.0
    return (hidden * weights).sum(axis=1) / totals


def _token_vector(token: str, salt: str) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(f"{salt}\x00{token}".encode()).digest()[:8], "big")
    rng = np.random.RandomState(seed % (2 ** 32))
    return rng.standard_normal(HIDDEN_WIDTH)


class StubTextBackend:
    """Deterministic hash-based token embeddings; whitespace tokenization."""

    def hidden_states(self, texts, config):
        batch = len(texts)
        seq = config.max_text_length
        hidden = np.zeros((batch, seq, HIDDEN_WIDTH))
        mask = np.zeros((batch, seq), dtype=np.int64)
        salt = config.checkpoint or "stub-text"
        for i, text in enumerate(texts):
            tokens = (["<s>"] + text.split())[:seq]  # tail truncation
            # the sequence-start token summarizes the truncated content,
            # mirroring how a real CLS state depends on the whole input
            hidden[i, 0] = _token_vector(" ".join(tokens[1:]), salt + "-cls")
            mask[i, 0] = 1
            for j, tok in enumerate(tokens[1:], start=1):
                hidden[i, j] = _token_vector(tok, salt)
                mask[i, j] = 1
        return hidden, mask


class StubImageBackend:
    """Deterministic features from resized pixel statistics."""

    def hidden_states(self, images, config):
        batch = images.shape[0]
        hidden = np.zeros((batch, 2, HIDDEN_WIDTH))
        for i in range(batch):
            digest = hashlib.sha256(np.ascontiguousarray(images[i]).tobytes()).digest()
            seed = int.from_bytes(digest[:8], "big") % (2 ** 32)
            rng = np.random.RandomState(seed)
            hidden[i] = rng.standard_normal((2, HIDDEN_WIDTH))
        return hidden


class RecordedTextBackend:
    """Replays stored hidden states keyed by input text; for fixture tests."""

    def __init__(self, store: dict[str, np.ndarray]):
        self.store = store

    def hidden_states(self, texts, config):
        hidden = []
        for text in texts:
            if text not in self.store:
                raise EncoderError(f"no recorded states for text {text!r}")
            hidden.append(self.store[text])
        stacked = np.stack(hidden) if hidden else np.zeros((0, 1, HIDDEN_WIDTH))
        mask = np.ones(stacked.shape[:2], dtype=np.int64)
        return stacked, mask


def encode_text(texts: Sequence[str], config: EncoderConfig,
                backend: TextBackend | None = None) -> np.ndarray:
    """Pooled 768-wide text features, one row per input."""
    if config.modality != "text":
        raise EncoderError("encode_text requires a text config")
    if not texts:
        return np.zeros((0, HIDDEN_WIDTH))
    backend = backend or StubTextBackend()
    hidden, mask = backend.hidden_states(texts, config)
    return _pool(hidden, mask, config.pooling)


def load_images(paths: Sequence[str | Path], config: EncoderConfig) -> np.ndarray:
    """Load and bilinearly resize images to the configured size."""
    from PIL import Image

    h, w, _ = config.image_size
    out = np.zeros((len(paths), h, w, 3), dtype=np.float32)
    for i, p in enumerate(paths):
        try:
            with Image.open(p) as img:
                img = img.convert("RGB").resize((w, h), Image.BILINEAR)
                out[i] = np.asarray(img, dtype=np.float32) / 255.0
        except OSError as exc:
            raise EncoderError(f"unreadable image at index {i} ({p}): {exc}") from exc
    return out


def encode_image(paths: Sequence[str | Path], config: EncoderConfig,
                 backend: ImageBackend | None = None) -> np.ndarray:
    """Pooled 768-wide image features, one row per input."""
    if config.modality != "image":
        raise EncoderError("encode_image requires an image config")
    if not paths:
        return np.zeros((0, HIDDEN_WIDTH))
    backend = backend or StubImageBackend()
    images = load_images(paths, config)
    hidden = backend.hidden_states(images, config)
    mask = np.ones(hidden.shape[:2], dtype=np.int64)
    return _pool(hidden, mask, config.pooling)


def _layer_stack(encoder):
    if hasattr(encoder, "layers"):
        return list(encoder.layers)
    # Hugging Face style: model.encoder.layer
    if hasattr(encoder, "encoder") and hasattr(encoder.encoder, "layer"):
        return list(encoder.encoder.layer)
    raise EncoderError("encoder exposes no ordered layer stack")


def freeze_half(encoder):
    """Exclude the first floor(n/2) layers from gradient updates."""
    stack = _layer_stack(encoder)
    for layer in stack[: len(stack) // 2]:
        for param in layer.parameters():
            param.requires_grad = False
    return encoder


def freeze_all(encoder):
    for param in encoder.parameters():
        param.requires_grad = False
    return encoder


class FeatureCache:
    """Keyed store of FeatureRecords in a single zip with a versioned header.

    The header records checkpoint ids and pooling so a stale cache is
    detected instead of silently reused.
    """

    VERSION = 1

    def __init__(self, path: str | Path, text_checkpoint: str, image_checkpoint: str,
                 pooling: tuple[str, str]):
        self.path = Path(path)
        self.header = {
            "version": self.VERSION,
            "text_checkpoint": text_checkpoint,
            "image_checkpoint": image_checkpoint,
            "pooling": list(pooling),
        }
        self._records: dict[str, FeatureRecord] = {}
        if self.path.exists():
            self._load()

    def _load(self):
        with zipfile.ZipFile(self.path) as zf:
            header = json.loads(zf.read("header.json"))
            if header != self.header:
                raise EncoderError(
                    f"stale feature cache {self.path}: header {header} != expected {self.header}")
            ids = json.loads(zf.read("ids.json"))
            for pid in ids:
                text_vec = np.frombuffer(zf.read(f"{pid}.text"), dtype=np.float64)
                image_vec = np.frombuffer(zf.read(f"{pid}.image"), dtype=np.float64)
                self._records[pid] = FeatureRecord(
                    pid, text_vec, image_vec, tuple(self.header["pooling"]))

    def put(self, record: FeatureRecord) -> None:
        self._records[record.post_id] = record

    def get(self, post_id: str) -> FeatureRecord:
        return self._records[post_id]

    def __contains__(self, post_id: str) -> bool:
        return post_id in self._records

    def __len__(self) -> int:
        return len(self._records)

    def save(self) -> None:
        with zipfile.ZipFile(self.path, "w") as zf:
            zf.writestr("header.json", json.dumps(self.header, sort_keys=True))
            zf.writestr("ids.json", json.dumps(sorted(self._records)))
            for pid in sorted(self._records):
                rec = self._records[pid]
                zf.writestr(f"{pid}.text", np.asarray(rec.text_vec, dtype=np.float64).tobytes())
                zf.writestr(f"{pid}.image", np.asarray(rec.image_vec, dtype=np.float64).tobytes())
