"""Displacement-error metrics, best-of-k evaluation, and report aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .types import InvalidInputError, SceneSample


@dataclass
class MetricsReport:
    ade: float
    fde: float
    units: str = "meters"
    k: int = 1
    sample_count: int = 0
    per_set: dict[str, tuple[float, float]] = field(default_factory=dict)
    buckets: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "ade": float(self.ade),
            "fde": float(self.fde),
            "units": self.units,
            "k": self.k,
            "sample_count": self.sample_count,
            "per_set": {k: [float(a), float(f)] for k, (a, f) in self.per_set.items()},
            "buckets": self.buckets,
        }

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def ade(pred: np.ndarray, gt: np.ndarray) -> float:
    """Mean Euclidean distance between predicted and true points over time."""
    pred, gt = np.asarray(pred, float), np.asarray(gt, float)
    if pred.shape != gt.shape:
        raise InvalidInputError(f"shape mismatch {pred.shape} vs {gt.shape}")
    return float(np.linalg.norm(pred - gt, axis=-1).mean())


def fde(pred: np.ndarray, gt: np.ndarray) -> float:
    """Euclidean distance between the predicted and true final points."""
    pred, gt = np.asarray(pred, float), np.asarray(gt, float)
    if pred.shape != gt.shape:
        raise InvalidInputError(f"shape mismatch {pred.shape} vs {gt.shape}")
    return float(np.linalg.norm(pred[..., -1, :] - gt[..., -1, :], axis=-1).mean())


def best_of_k(model, scene: SceneSample, k: int, seed: int = 0) -> tuple[float, float]:
    """Select, over k noise draws, the sample minimizing scene ADE.

    Reports that sample's ADE and its FDE (ties broken by lowest draw index).
    `model` must expose `sample(scene, seed) -> PredictionBatch`.
    """
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    gt = scene.future_array()
    best = None
    for draw in range(k):
        batch = model.sample(scene, seed=seed + draw)
        a = ade(batch.predicted, gt)
        if best is None or a < best[0]:
            best = (a, fde(batch.predicted, gt))
    return best


def normalization_ratio(baseline_metric: float, ours_metric: float) -> float:
    """Relative error reduction versus a baseline: (baseline - ours) / baseline."""
    if baseline_metric <= 0:
        raise InvalidInputError("baseline metric must be positive")
    return (baseline_metric - ours_metric) / baseline_metric


def evaluate_scenes(
    model,
    scenes: list[SceneSample],
    k: int = 1,
    seed: int = 0,
    units: str | None = None,
) -> MetricsReport:
    """Best-of-k metrics averaged over scenes (per-scene, actor-averaged)."""
    if not scenes:
        raise InvalidInputError("no scenes to evaluate")
    ades, fdes = [], []
    for i, scene in enumerate(scenes):
        a, f = best_of_k(model, scene, k, seed=seed + i * max(k, 1))
        ades.append(a)
        fdes.append(f)
    return MetricsReport(
        ade=float(np.mean(ades)),
        fde=float(np.mean(fdes)),
        units=units or scenes[0].units,
        k=k,
        sample_count=len(scenes),
    )


def crowd_split_report(
    scenes: list[SceneSample],
    predictions: list[np.ndarray],
    bucket_edges: list[int],
    units: str | None = None,
    k: int = 1,
) -> MetricsReport:
    """Group scenes by actor count into [lo, hi) buckets and report per bucket."""
    if len(scenes) != len(predictions):
        raise InvalidInputError("one prediction array per scene required")
    edges = list(bucket_edges)
    if min(s.n_actors for s in scenes) < edges[0] or max(
        s.n_actors for s in scenes
    ) >= edges[-1]:
        raise InvalidInputError("bucket edges must cover all scene sizes")
    buckets = []
    all_a, all_f = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        in_bucket = [
            (s, p) for s, p in zip(scenes, predictions) if lo <= s.n_actors < hi
        ]
        if not in_bucket:
            buckets.append({"lo": lo, "hi": hi, "empty": True})
            continue
        a = float(np.mean([ade(p, s.future_array()) for s, p in in_bucket]))
        f = float(np.mean([fde(p, s.future_array()) for s, p in in_bucket]))
        buckets.append(
            {"lo": lo, "hi": hi, "empty": False, "ade": a, "fde": f,
             "count": len(in_bucket)}
        )
        all_a.extend(ade(p, s.future_array()) for s, p in in_bucket)
        all_f.extend(fde(p, s.future_array()) for s, p in in_bucket)
    return MetricsReport(
        ade=float(np.mean(all_a)),
        fde=float(np.mean(all_f)),
        units=units or scenes[0].units,
        k=k,
        sample_count=len(scenes),
        buckets=buckets,
    )
