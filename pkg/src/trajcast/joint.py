"""Joint pedestrian/vehicle forecaster.

Per-type individual encoder-decoder branches operate in each actor's ego
frame; a shared interactive branch (graph encoder + convolutional scene-image
encoder) operates in the SDV-centered global frame. The final prediction is
the ego-branch output mapped back to the global frame plus the interactive
correction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn

from .graph_encoder import GraphEncoderConfig, MotionGraphEncoder, make_mlp
from .types import (
    ActorType,
    InvalidInputError,
    JointSceneSample,
    PredictionBatch,
    TrajectoryWindow,
)


def rotation_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def to_ego(window: TrajectoryWindow) -> TrajectoryWindow:
    """Translate so the current position is the origin, rotate by -heading."""
    if window.heading is None:
        raise InvalidInputError("ego transform needs a heading")
    rot = rotation_matrix(-window.heading)
    origin = window.current_position
    return TrajectoryWindow(
        actor_id=window.actor_id,
        observed=(window.observed - origin) @ rot.T,
        future=(window.future - origin) @ rot.T,
        timestep=window.timestep,
        actor_type=window.actor_type,
        heading=0.0,
    )


def from_ego(points: np.ndarray, origin: np.ndarray, heading: float) -> np.ndarray:
    """Inverse of the ego transform for a (T, 2) point sequence."""
    rot = rotation_matrix(heading)
    return np.asarray(points) @ rot.T + np.asarray(origin)


@dataclass(frozen=True)
class JointConfig:
    graph: GraphEncoderConfig = field(default_factory=GraphEncoderConfig)
    t_obs: int = 5
    t_pred: int = 30
    individual_hidden: list[int] = field(default_factory=lambda: [64, 64])
    scene_embed_dim: int = 32
    scene_channels: list[int] = field(default_factory=lambda: [16, 32])
    raster_size: int = 500
    combiner_hidden: list[int] = field(default_factory=lambda: [64])


class IndividualBranch(nn.Module):
    """MLP encoder-decoder over flattened ego-frame observed displacements."""

    def __init__(self, t_obs: int, t_pred: int, hidden: list[int]):
        super().__init__()
        self.net = make_mlp(2 * t_obs, hidden, 2 * t_pred)
        self.t_obs = t_obs
        self.t_pred = t_pred

    def forward(self, ego_observed: torch.Tensor) -> torch.Tensor:
        """(N, t_obs+1, 2) ego observed coords -> (N, t_pred, 2) ego future."""
        disp = ego_observed[:, 1:] - ego_observed[:, :-1]
        flat = disp.reshape(disp.shape[0], -1)
        return self.net(flat).reshape(-1, self.t_pred, 2)


class ConvSceneEncoder(nn.Module):
    """Small strided CNN mapping an RGB raster to a fixed-dimension vector."""

    def __init__(self, channels: list[int], embed_dim: int):
        super().__init__()
        layers: list[nn.Module] = []
        prev = 3
        for ch in channels:
            layers.append(nn.Conv2d(prev, ch, kernel_size=3, stride=2, padding=1))
            layers.append(nn.ReLU())
            prev = ch
        self.convs = nn.Sequential(*layers)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.proj = nn.Linear(prev, embed_dim)

    def forward(self, raster: torch.Tensor) -> torch.Tensor:
        """(3, H, W) image in [0, 1] -> (embed_dim,) scene embedding."""
        if raster.ndim != 3 or raster.shape[0] != 3:
            raise InvalidInputError(
                f"raster must be (3, H, W), got {tuple(raster.shape)}"
            )
        feats = self.pool(self.convs(raster[None])).flatten(1)
        return self.proj(feats)[0]


class JointForecastModel(nn.Module):
    """Combines per-type ego branches with the shared interactive branch."""

    def __init__(self, config: JointConfig | None = None):
        super().__init__()
        cfg = config or JointConfig()
        self.config = cfg
        self.branches = nn.ModuleDict(
            {
                t.value: IndividualBranch(cfg.t_obs, cfg.t_pred, list(cfg.individual_hidden))
                for t in ActorType
            }
        )
        self.encoder = MotionGraphEncoder(cfg.graph)
        self.scene_encoder = ConvSceneEncoder(list(cfg.scene_channels), cfg.scene_embed_dim)
        self.combiner = make_mlp(
            cfg.graph.embed_dim + cfg.scene_embed_dim,
            list(cfg.combiner_hidden),
            2 * cfg.t_pred,
        )

    def individual_forward(
        self, ego_observed: torch.Tensor, actor_type: ActorType
    ) -> torch.Tensor:
        branch = self.branches[actor_type.value]
        return branch(ego_observed[None] if ego_observed.ndim == 2 else ego_observed)

    def interactive_forward(
        self, observed: torch.Tensor, scene_embedding: torch.Tensor
    ) -> torch.Tensor:
        """Global-frame observed (N, T, 2) + scene vector -> (N, t_pred, 2)."""
        enc = self.encoder(observed)
        n = observed.shape[0]
        s = scene_embedding[None].expand(n, -1)
        out = self.combiner(torch.cat([enc.actor_embeddings, s], dim=-1))
        return out.reshape(n, self.config.t_pred, 2)

    def forward(
        self,
        observed: torch.Tensor,
        ego_observed: torch.Tensor,
        actor_types: list[ActorType],
        origins: torch.Tensor,
        headings: torch.Tensor,
        raster: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Differentiable core; returns (predicted, individual_global, interaction).

        `individual_global` is the ego-branch output already mapped through each
        actor's pose transform; `predicted` = individual_global + interaction.
        """
        n = observed.shape[0]
        z_ind_ego = torch.zeros(
            n, self.config.t_pred, 2, dtype=observed.dtype, device=observed.device
        )
        for t in ActorType:
            idx = [i for i, a in enumerate(actor_types) if a is t]
            if idx:
                z_ind_ego[idx] = self.branches[t.value](ego_observed[idx])
        cos_h, sin_h = torch.cos(headings), torch.sin(headings)
        # per-actor rotation by +heading, then translation to the actor origin
        rot = torch.stack(
            [torch.stack([cos_h, -sin_h], -1), torch.stack([sin_h, cos_h], -1)], -2
        )  # (N, 2, 2)
        z_ind_global = torch.einsum("nij,ntj->nti", rot, z_ind_ego) + origins[:, None, :]
        s = self.scene_encoder(raster)
        z_inter = self.interactive_forward(observed, s)
        return z_ind_global + z_inter, z_ind_global, z_inter

    def predict(self, sample: JointSceneSample, raster: torch.Tensor) -> PredictionBatch:
        """Frozen-weights prediction for one joint scene sample."""
        dtype = next(self.parameters()).dtype
        tensors = prepare_joint_inputs(sample, dtype)
        with torch.no_grad():
            predicted, z_ind, z_inter = self.forward(*tensors, raster.to(dtype))
        return PredictionBatch(
            predicted=predicted.numpy().astype(np.float64),
            individual_component=z_ind.numpy().astype(np.float64),
            interaction_component=z_inter.numpy().astype(np.float64),
        )


def prepare_joint_inputs(sample: JointSceneSample, dtype=torch.float32):
    """Stack global/ego observed coords, types, origins, and headings."""
    observed = torch.as_tensor(sample.scene.observed_array(), dtype=dtype)
    ego = torch.stack(
        [torch.as_tensor(to_ego(w).observed, dtype=dtype) for w in sample.actors]
    )
    types = [w.actor_type for w in sample.actors]
    origins = torch.as_tensor(
        np.stack([w.current_position for w in sample.actors]), dtype=dtype
    )
    headings = torch.as_tensor(
        np.array([w.heading for w in sample.actors]), dtype=dtype
    )
    return observed, ego, types, origins, headings


def joint_loss(
    predicted: torch.Tensor,
    individual_global: torch.Tensor,
    future: torch.Tensor,
    lam: float = 0.5,
) -> torch.Tensor:
    """Convex combination of the individual-branch and final L2 losses."""
    if not 0.0 <= lam <= 1.0:
        raise InvalidInputError("lambda must lie in [0, 1]")
    l_ind = ((individual_global - future) ** 2).sum()
    l_final = ((predicted - future) ** 2).sum()
    return lam * l_ind + (1.0 - lam) * l_final
