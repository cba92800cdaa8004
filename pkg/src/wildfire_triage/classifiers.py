"""Dual-encoder fusion classifier, its ablation variants, and classical baselines.

The fusion model consumes a 768-wide feature per modality (from the
encoder wrappers or from torch encoder modules run in-graph), projects
each to a shared width, mixes the two projected tokens with a
configurable fusion module, and classifies with an MLP or linear head.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import torch
from torch import nn

from .encoders import HIDDEN_WIDTH


class ClassifierError(Exception):
    pass


@dataclass(frozen=True)
class FusionModelConfig:
    proj_dim: int = 512
    fusion: str = "transformer"  # transformer | concat | cross_attention | none
    fusion_layers: int = 2
    heads: int = 8
    ffn_dim: int = 2048
    dropout: float = 0.2
    head_hidden: int = 256
    num_classes: int = 13
    head: str = "mlp"  # mlp | linear

    def __post_init__(self):
        if self.fusion not in ("transformer", "concat", "cross_attention", "none"):
            raise ClassifierError(f"unknown fusion {self.fusion!r}")
        if self.head not in ("mlp", "linear"):
            raise ClassifierError(f"unknown head {self.head!r}")
        if self.proj_dim % self.heads != 0:
            raise ClassifierError("proj_dim must be divisible by heads")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 8
    learning_rate: float = 1e-5
    weight_decay: float = 0.01
    epochs: int = 10
    seed: int = 8


@dataclass(frozen=True)
class BaselineConfig:
    kind: str  # DT | GNB | KNN | SVM
    knn_k: int = 1
    dt_class_weight: str = "balanced"
    pca_components: int = 250

    def __post_init__(self):
        if self.kind not in ("DT", "GNB", "KNN", "SVM"):
            raise ClassifierError(f"unknown baseline kind {self.kind!r}")


class StubTorchEncoder(nn.Module):
    """Small residual layer stack emitting 768-wide features.

    Stands in for a pretrained encoder in tests: it has an ordered layer
    stack (so half/full freezing applies) and starts near the identity so
    upstream feature structure survives.
    """

    def __init__(self, n_layers: int = 4, width: int = HIDDEN_WIDTH):
        super().__init__()
        self.layers = nn.ModuleList(nn.Linear(width, width) for _ in range(n_layers))
        for layer in self.layers:
            nn.init.normal_(layer.weight, std=1e-3)
            nn.init.zeros_(layer.bias)

    def forward(self, x):
        for layer in self.layers:
            x = x + layer(x)
        return x


class FusionModel(nn.Module):
    def __init__(self, cfg: FusionModelConfig,
                 text_encoder: Optional[nn.Module] = None,
                 image_encoder: Optional[nn.Module] = None):
        super().__init__()
        self.cfg = cfg
        self.text_encoder = text_encoder
        self.image_encoder = image_encoder
        self.text_proj = nn.Linear(HIDDEN_WIDTH, cfg.proj_dim)
        self.image_proj = nn.Linear(HIDDEN_WIDTH, cfg.proj_dim)
        if cfg.fusion == "transformer":
            layer = nn.TransformerEncoderLayer(
                d_model=cfg.proj_dim, nhead=cfg.heads,
                dim_feedforward=cfg.ffn_dim, dropout=cfg.dropout,
                batch_first=True)
            self.fusion = nn.TransformerEncoder(layer, num_layers=cfg.fusion_layers)
        elif cfg.fusion == "cross_attention":
            # query=image, key/value=text: the stronger direction
            self.fusion = nn.MultiheadAttention(
                cfg.proj_dim, cfg.heads, dropout=cfg.dropout, batch_first=True)
        elif cfg.fusion == "concat":
            self.fusion = nn.Sequential(
                nn.Linear(2 * cfg.proj_dim, cfg.proj_dim), nn.ReLU())
        else:
            self.fusion = None
        if cfg.head == "mlp":
            self.head = nn.Sequential(
                nn.Linear(cfg.proj_dim, cfg.head_hidden),
                nn.ReLU(),
                nn.Dropout(cfg.dropout),
                nn.Linear(cfg.head_hidden, cfg.num_classes))
        else:
            self.head = nn.Linear(cfg.proj_dim, cfg.num_classes)

    def forward(self, text_feats: torch.Tensor, image_feats: torch.Tensor) -> torch.Tensor:
        if text_feats.shape[0] == 0:
            raise ClassifierError("empty batch")
        if text_feats.shape[1] != HIDDEN_WIDTH or image_feats.shape[1] != HIDDEN_WIDTH:
            raise ClassifierError(
                f"modality width mismatch: expected {HIDDEN_WIDTH}-wide features")
        if self.text_encoder is not None:
            text_feats = self.text_encoder(text_feats)
        if self.image_encoder is not None:
            image_feats = self.image_encoder(image_feats)
        t = self.text_proj(text_feats)
        v = self.image_proj(image_feats)
        if self.cfg.fusion == "transformer":
            tokens = torch.stack([t, v], dim=1)
            fused = self.fusion(tokens).mean(dim=1)
        elif self.cfg.fusion == "cross_attention":
            out, _ = self.fusion(v.unsqueeze(1), t.unsqueeze(1), t.unsqueeze(1))
            fused = out.squeeze(1)
        elif self.cfg.fusion == "concat":
            fused = self.fusion(torch.cat([t, v], dim=1))
        else:
            fused = (t + v) / 2
        return self.head(fused)


def build_fusion_model(cfg: FusionModelConfig,
                       text_encoder: Optional[nn.Module] = None,
                       image_encoder: Optional[nn.Module] = None,
                       seed: int = 0) -> FusionModel:
    """Construct a fusion model with seed-deterministic initialization."""
    torch.manual_seed(seed)
    return FusionModel(cfg, text_encoder, image_encoder)


@dataclass
class TrainHistory:
    epoch_loss: list[float] = field(default_factory=list)
    epoch_val_f1: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_val_f1: float = float("-inf")


def _weighted_f1_indices(y_true: np.ndarray, y_pred: np.ndarray, k: int) -> float:
    total = len(y_true)
    score = 0.0
    for c in range(k):
        tp = int(np.sum((y_true == c) & (y_pred == c)))
        fp = int(np.sum((y_true != c) & (y_pred == c)))
        fn = int(np.sum((y_true == c) & (y_pred != c)))
        denom = 2 * tp + fp + fn
        f1 = 2 * tp / denom if denom else 0.0
        score += np.sum(y_true == c) / total * f1
    return score


def _predict(model: FusionModel, text: torch.Tensor, image: torch.Tensor) -> np.ndarray:
    model.eval()
    with torch.no_grad():
        logits = model(text, image)
    return logits.argmax(dim=1).cpu().numpy()


def train(model: FusionModel,
          train_set: tuple[torch.Tensor, torch.Tensor, torch.Tensor],
          val_set: tuple[torch.Tensor, torch.Tensor, torch.Tensor],
          cfg: TrainConfig) -> tuple[FusionModel, TrainHistory]:
    """Adam + cross-entropy training with best-epoch selection by val weighted F1.

    Returns the model restored to its best checkpoint plus the full history.
    With epochs=0 the initialization itself is the checkpoint.
    """
    text, image, labels = train_set
    if text.shape[0] == 0:
        raise ClassifierError("empty train set")
    k = model.cfg.num_classes
    if labels.numel() and (labels.min() < 0 or labels.max() >= k):
        raise ClassifierError(f"label indices must be in [0,{k})")
    optimizer = torch.optim.Adam(
        (p for p in model.parameters() if p.requires_grad),
        lr=cfg.learning_rate, weight_decay=cfg.weight_decay)
    loss_fn = nn.CrossEntropyLoss()
    generator = torch.Generator().manual_seed(cfg.seed)
    history = TrainHistory()
    best_state = copy.deepcopy(model.state_dict())
    n = text.shape[0]

    def validate() -> float:
        v_text, v_image, v_labels = val_set
        if v_text.shape[0] == 0:
            return 0.0
        preds = _predict(model, v_text, v_image)
        return _weighted_f1_indices(v_labels.cpu().numpy(), preds, k)

    for epoch in range(cfg.epochs):
        model.train()
        order = torch.randperm(n, generator=generator)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            optimizer.zero_grad()
            logits = model(text[idx], image[idx])
            loss = loss_fn(logits, labels[idx])
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))
        val_f1 = validate()
        history.epoch_loss.append(float(np.mean(losses)))
        history.epoch_val_f1.append(val_f1)
        if val_f1 > history.best_val_f1:
            history.best_val_f1 = val_f1
            history.best_epoch = epoch + 1
            best_state = copy.deepcopy(model.state_dict())
    model.load_state_dict(best_state)
    return model, history


def fit_baseline(features: np.ndarray, labels: np.ndarray, cfg: BaselineConfig):
    """Fit one of the classical baselines on concatenated dual-modality features.

    The SVM path reduces dimensionality with PCA first; all other
    hyperparameters stay at scikit-learn defaults.
    """
    from sklearn.decomposition import PCA
    from sklearn.naive_bayes import GaussianNB
    from sklearn.neighbors import KNeighborsClassifier
    from sklearn.pipeline import Pipeline
    from sklearn.svm import SVC
    from sklearn.tree import DecisionTreeClassifier

    if not np.all(np.isfinite(features)):
        raise ClassifierError("features must be finite")
    if cfg.kind == "DT":
        model = DecisionTreeClassifier(class_weight=cfg.dt_class_weight)
    elif cfg.kind == "GNB":
        model = GaussianNB()
    elif cfg.kind == "KNN":
        model = KNeighborsClassifier(n_neighbors=cfg.knn_k)
    else:
        if cfg.pca_components >= features.shape[1]:
            raise ClassifierError(
                f"pca_components ({cfg.pca_components}) must be < feature width"
                f" ({features.shape[1]})")
        model = Pipeline([("pca", PCA(n_components=cfg.pca_components)), ("svm", SVC())])
    model.fit(features, labels)
    return model
