"""Loss, AUCROC, accuracy and multi-seed aggregation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch

from ..errors import UndefinedAUCError

EPS = 1e-12


def bce_loss(s, y) -> float:
    """-(y0 log s0 + y1 log s1), averaged over a batch.

    ``s`` and ``y`` are a single pair or an (N, 2) array of pairs; ``y`` is
    one-hot. Log arguments are clamped at ``EPS``.
    """
    s = np.atleast_2d(np.asarray(s, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if s.shape != y.shape or s.shape[-1] != 2:
        raise ValueError(f"score/label shape mismatch: {s.shape} vs {y.shape}")
    per_example = -(y * np.log(np.clip(s, EPS, None))).sum(axis=1)
    return float(per_example.mean())


def bce_loss_torch(s: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Differentiable twin of :func:`bce_loss`."""
    return -(y * torch.log(s.clamp(min=EPS))).sum(dim=1).mean()


def binary_cross_entropy(s, y) -> float:
    """Per-output binary cross-entropy summed over both scores, batch mean.

    Unlike :func:`bce_loss` this also penalises a high score on the wrong
    class, so the two independent sigmoids cannot both saturate at 1.
    """
    s = np.clip(np.atleast_2d(np.asarray(s, dtype=np.float64)), EPS, 1.0 - EPS)
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if s.shape != y.shape or s.shape[-1] != 2:
        raise ValueError(f"score/label shape mismatch: {s.shape} vs {y.shape}")
    return float(-(y * np.log(s) + (1 - y) * np.log(1 - s)).sum(axis=1).mean())


def binary_cross_entropy_torch(s: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    s = s.clamp(EPS, 1.0 - EPS)
    return -(y * torch.log(s) + (1 - y) * torch.log(1 - s)).sum(dim=1).mean()


LOSSES = {"bce": binary_cross_entropy_torch, "true-class": bce_loss_torch}


def one_hot(labels: Sequence[int]) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((len(labels), 2))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def _midranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(len(x))
    i = 0
    while i < len(xs):
        j = i
        while j + 1 < len(xs) and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auc_roc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney statistic: P(score_pos > score_neg) with ties counted half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUCError("AUC needs at least one positive and one negative label")
    u = _midranks(scores)[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def accuracy(predictions: Sequence[int], labels: Sequence[int]) -> float:
    if len(predictions) != len(labels):
        raise ValueError(f"length mismatch: {len(predictions)} predictions, {len(labels)} labels")
    if len(labels) == 0:
        raise ValueError("accuracy of an empty set is undefined")
    return float(np.mean(np.asarray(predictions) == np.asarray(labels)))


@dataclass
class SeedResult:
    seed: int
    auc: float
    accuracy: float
    train_accuracy: Optional[float] = None
    final_loss: Optional[float] = None


@dataclass
class MetricsReport:
    """Per-seed metrics plus mean and population standard deviation."""

    per_seed: list[SeedResult]
    mean_auc: float
    std_auc: float
    mean_acc: float
    std_acc: float
    config_fingerprint: str = ""
    config: dict = field(default_factory=dict)
    std_kind: str = "population"

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "MetricsReport":
        data = dict(data)
        data["per_seed"] = [SeedResult(**r) for r in data["per_seed"]]
        return cls(**data)

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "MetricsReport":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def aggregate_runs(per_seed: Sequence[SeedResult], config_fingerprint: str = "", config=None) -> MetricsReport:
    if not per_seed:
        raise ValueError("no seed results to aggregate")
    aucs = np.array([r.auc for r in per_seed], dtype=np.float64)
    accs = np.array([r.accuracy for r in per_seed], dtype=np.float64)
    return MetricsReport(list(per_seed), float(aucs.mean()), float(aucs.std()), float(accs.mean()),
                         float(accs.std()), config_fingerprint, dict(config or {}))
