"""Figure emission: trajectory overlays and 2-D projections of interaction embeddings."""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .types import InvalidInputError, SceneSample  # noqa: E402

# strip volatile PNG metadata so identical runs produce identical bytes
_PNG_META = {"Software": ""}


def collect_interaction_embeddings(generator, scenes: list[SceneSample]):
    """Gather e_ij over all scenes with >= 2 actors, with their actor pairs."""
    import torch

    embeddings, pairs = [], []
    for scene_idx, scene in enumerate(scenes):
        if scene.n_actors < 2:
            continue
        observed = torch.as_tensor(scene.observed_array(), dtype=torch.float32)
        with torch.no_grad():
            enc = generator.encoder(observed)
        for (i, j), e in enc.interaction_map().items():
            embeddings.append(e.numpy())
            pairs.append((scene_idx, i, j))
    if len(embeddings) < 2:
        raise InvalidInputError("need at least 2 interactions to visualize")
    return np.stack(embeddings), pairs


def project_2d(embeddings: np.ndarray, seed: int = 0) -> np.ndarray:
    """t-SNE projection with a fixed seed (PCA for very small inputs)."""
    from sklearn.decomposition import PCA
    from sklearn.manifold import TSNE

    n = embeddings.shape[0]
    if n < 6:
        return PCA(n_components=2, random_state=seed).fit_transform(embeddings)
    perplexity = min(30.0, (n - 1) / 3.0)
    tsne = TSNE(n_components=2, random_state=seed, perplexity=perplexity, init="pca")
    return tsne.fit_transform(embeddings)


def plot_embedding_scatter(points: np.ndarray, path, highlight=None) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(points[:, 0], points[:, 1], s=10, c="gray")
    if highlight:
        for idx, color in highlight:
            ax.scatter(points[idx, 0], points[idx, 1], s=40, c=color)
    ax.set_title("interaction embeddings (2-D projection)")
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def plot_interaction_pair(
    scene: SceneSample, i: int, j: int, path, color: str = "red"
) -> None:
    """Side-by-side style plot of one interacting actor pair."""
    fig, ax = plt.subplots(figsize=(4, 4))
    for idx in (i, j):
        w = scene.windows[idx]
        ax.plot(w.observed[:, 0], w.observed[:, 1], color=color, linestyle="-")
        future = np.vstack([w.observed[-1:], w.future])
        ax.plot(future[:, 0], future[:, 1], color=color, linestyle="--")
    ax.set_aspect("equal", adjustable="datalim")
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def plot_trajectory_overlay(
    scene: SceneSample,
    prediction: np.ndarray,
    path,
    baseline_prediction: np.ndarray | None = None,
) -> None:
    """Ground truth (green solid), prediction (red dashed), baseline (blue dashed)."""
    fig, ax = plt.subplots(figsize=(5, 5))
    for idx, w in enumerate(scene.windows):
        ax.plot(w.observed[:, 0], w.observed[:, 1], color="black", alpha=0.5)
        gt = np.vstack([w.observed[-1:], w.future])
        ax.plot(gt[:, 0], gt[:, 1], color="green", linestyle="-")
        pred = np.vstack([w.observed[-1:], prediction[idx]])
        ax.plot(pred[:, 0], pred[:, 1], color="red", linestyle="--")
        if baseline_prediction is not None:
            base = np.vstack([w.observed[-1:], baseline_prediction[idx]])
            ax.plot(base[:, 0], base[:, 1], color="blue", linestyle="--")
    ax.set_aspect("equal", adjustable="datalim")
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
