"""Multimodal topic exploration: embed, reduce, cluster, extract keywords, merge.

Used for taxonomy development: posts are jointly embedded, reduced to a
low-dimensional space, density-clustered into fine-grained topics, and
merged hierarchically while inspecting class-based keywords.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .corpus import Post

OUTLIER_TOPIC = -1


class TopicError(Exception):
    pass


@dataclass(frozen=True)
class TopicModelConfig:
    reduced_dims: int = 5
    neighborhood_size: int = 15
    ngram_range: tuple[int, int] = (1, 2)
    stopword_removal: bool = True
    target_topics: int | None = None
    embedding_checkpoint: str = "sentence-transformers/clip-ViT-B-32"

    def __post_init__(self):
        if self.reduced_dims < 2:
            raise TopicError("reduced_dims must be >= 2")
        if self.neighborhood_size < 2:
            raise TopicError("neighborhood_size must be >= 2")


@dataclass
class Topic:
    topic_id: int
    member_ids: list[str]
    keywords: list[str]
    representatives: list[str] = field(default_factory=list)
    centroid: np.ndarray | None = None


class JointEmbedder(Protocol):
    def embed(self, text: str, image_path: str) -> np.ndarray:
        """Fixed-width joint text-image vector for one post."""


class RecordedEmbedder:
    """Replays stored joint embeddings keyed by post id."""

    def __init__(self, store: dict[str, np.ndarray]):
        self.store = store

    def embed(self, text, image_path, post_id=None):
        raise NotImplementedError("use embed_posts, which passes post ids")


def embed_posts(posts: Sequence[Post], embedder) -> np.ndarray:
    """One embedding row per post, in input order."""
    if not posts:
        return np.zeros((0, 0))
    rows = []
    errors = []
    for post in posts:
        try:
            if isinstance(embedder, RecordedEmbedder):
                rows.append(np.asarray(embedder.store[post.id]))
            else:
                rows.append(np.asarray(embedder.embed(post.text, post.image_path)))
        except KeyError:
            errors.append(post.id)
    if errors:
        raise TopicError(f"embedding failed for posts: {errors}")
    return np.stack(rows)


def _stopwords(config: TopicModelConfig) -> str | None:
    return "english" if config.stopword_removal else None


def _topic_keywords(member_texts_by_topic: dict[int, list[str]],
                    config: TopicModelConfig, top_k: int = 10) -> dict[int, list[str]]:
    """Class-based term weighting: frequency within a topic vs across topics."""
    from sklearn.feature_extraction.text import CountVectorizer

    topic_ids = [t for t in sorted(member_texts_by_topic) if t != OUTLIER_TOPIC]
    docs = [" ".join(member_texts_by_topic[t]) for t in topic_ids]
    if not docs or all(not d.strip() for d in docs):
        return {t: [] for t in topic_ids}
    vec = CountVectorizer(ngram_range=config.ngram_range, stop_words=_stopwords(config))
    try:
        counts = vec.fit_transform(docs).toarray().astype(float)
    except ValueError:  # empty vocabulary after stopword removal
        return {t: [] for t in topic_ids}
    vocab = np.array(vec.get_feature_names_out())
    tf = counts / np.maximum(counts.sum(axis=1, keepdims=True), 1.0)
    avg_count = counts.sum() / max(len(docs), 1)
    idf = np.log(1.0 + avg_count / np.maximum(counts.sum(axis=0), 1.0))
    scores = tf * idf
    out = {}
    for i, t in enumerate(topic_ids):
        order = np.argsort(-scores[i])
        out[t] = [vocab[j] for j in order[:top_k] if scores[i, j] > 0]
    return out


def _reduce_embeddings(embeddings: np.ndarray, config: TopicModelConfig) -> np.ndarray:
    from sklearn.decomposition import PCA

    dims = min(config.reduced_dims, embeddings.shape[1], embeddings.shape[0])
    if dims < 1 or np.allclose(embeddings, embeddings[0]):
        return np.zeros((embeddings.shape[0], 1))
    return PCA(n_components=dims).fit_transform(embeddings)


def fit_topics(embeddings: np.ndarray, texts: Sequence[str], post_ids: Sequence[str],
               config: TopicModelConfig) -> list[Topic]:
    """Reduce, density-cluster, and keyword-annotate the embedded posts.

    Outliers share the implicit topic -1, which carries no keywords.
    """
    from sklearn.cluster import HDBSCAN

    n = embeddings.shape[0]
    if n <= config.neighborhood_size:
        raise TopicError(
            f"need more than neighborhood_size={config.neighborhood_size} rows, got {n}")
    reduced = _reduce_embeddings(embeddings, config)
    if np.allclose(embeddings, embeddings[0]):
        labels = np.zeros(n, dtype=int)  # degenerate geometry: a single topic
    else:
        clusterer = HDBSCAN(min_cluster_size=config.neighborhood_size)
        labels = clusterer.fit_predict(reduced)
        if (labels == OUTLIER_TOPIC).all():
            labels = np.zeros(n, dtype=int)
    texts_by_topic: dict[int, list[str]] = {}
    ids_by_topic: dict[int, list[str]] = {}
    for i, lbl in enumerate(labels):
        texts_by_topic.setdefault(int(lbl), []).append(texts[i])
        ids_by_topic.setdefault(int(lbl), []).append(post_ids[i])
    keywords = _topic_keywords(texts_by_topic, config)
    topics = []
    for t in sorted(ids_by_topic):
        members = ids_by_topic[t]
        mask = np.array([int(l) == t for l in labels])
        topics.append(Topic(
            topic_id=t,
            member_ids=members,
            keywords=keywords.get(t, []),
            representatives=members[:3],
            centroid=reduced[mask].mean(axis=0),
        ))
    return topics


def reduce_topics(topics: Sequence[Topic], target: int,
                  texts_by_id: dict[str, str] | None = None,
                  config: TopicModelConfig | None = None) -> list[Topic]:
    """Merge nearest topic pairs (centroid distance) until `target` remain.

    The outlier topic never participates in merging. Keywords are
    recomputed from member texts when texts are supplied.
    """
    config = config or TopicModelConfig()
    real = [t for t in topics if t.topic_id != OUTLIER_TOPIC]
    outliers = [t for t in topics if t.topic_id == OUTLIER_TOPIC]
    if not 1 <= target <= len(real):
        raise TopicError(f"target {target} out of range [1, {len(real)}]")
    merged = [Topic(t.topic_id, list(t.member_ids), list(t.keywords),
                    list(t.representatives), None if t.centroid is None else t.centroid.copy())
              for t in real]
    while len(merged) > target:
        best = None
        for i in range(len(merged)):
            for j in range(i + 1, len(merged)):
                d = float(np.linalg.norm(merged[i].centroid - merged[j].centroid))
                if best is None or d < best[0]:
                    best = (d, i, j)
        _, i, j = best
        a, b = merged[i], merged[j]
        na, nb = len(a.member_ids), len(b.member_ids)
        centroid = (a.centroid * na + b.centroid * nb) / (na + nb)
        merged[i] = Topic(
            topic_id=a.topic_id,
            member_ids=a.member_ids + b.member_ids,
            keywords=[],
            representatives=(a.representatives + b.representatives)[:3],
            centroid=centroid,
        )
        del merged[j]
    if texts_by_id is not None:
        texts_by_topic = {
            t.topic_id: [texts_by_id[pid] for pid in t.member_ids] for t in merged}
        keywords = _topic_keywords(texts_by_topic, config)
        for t in merged:
            t.keywords = keywords.get(t.topic_id, [])
    return merged + outliers


def save_topic_report(topics: Sequence[Topic], path: str | Path) -> None:
    """Per-topic id, size, top keywords, and representative post ids."""
    payload = [
        {
            "topic_id": t.topic_id,
            "size": len(t.member_ids),
            "keywords": list(t.keywords[:10]),
            "representatives": list(t.representatives),
        }
        for t in sorted(topics, key=lambda t: t.topic_id)
    ]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
