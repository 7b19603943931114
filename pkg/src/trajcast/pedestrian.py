"""GAN-trained pedestrian forecaster.

The generator sums a per-actor LSTM-decoded displacement branch with an
interaction-conditioned correction branch; the discriminator scores complete
trajectories through its own interaction-graph encoder.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import torch
import torch.nn as nn

from .graph_encoder import GraphEncoderConfig, MotionGraphEncoder, make_mlp
from .types import InvalidInputError, PredictionBatch, SceneSample

PROB_EPS = 1e-7


@dataclass(frozen=True)
class GeneratorConfig:
    graph: GraphEncoderConfig = field(default_factory=GraphEncoderConfig)
    noise_dim: int = 8
    t_pred: int = 12
    # 'nmmp' = graph message passing, 'pool' = max-pool over actor embeddings,
    # 'none' = per-actor model with the correction branch disabled
    interaction: str = "nmmp"
    # 'double' = separate individual/interaction decoders summed per step,
    # 'single' = fuse actor embedding into one decoder, no correction term,
    # 'individual_only' = double structure but only the individual output used
    decoder_mode: str = "double"

    def __post_init__(self):
        if self.noise_dim < 1:
            raise InvalidInputError("noise_dim must be >= 1")
        if self.interaction not in ("nmmp", "pool", "none"):
            raise InvalidInputError(f"unknown interaction mode {self.interaction!r}")
        if self.decoder_mode not in ("double", "single", "individual_only"):
            raise InvalidInputError(f"unknown decoder mode {self.decoder_mode!r}")
        if self.decoder_mode == "single" and self.interaction == "none":
            raise InvalidInputError("single-decoder mode needs an interaction module")


@dataclass(frozen=True)
class DiscriminatorConfig:
    graph: GraphEncoderConfig = field(default_factory=GraphEncoderConfig)
    point_embed_dim: int = 16
    disc_interaction: str = "nmmp"  # 'nmmp' or 'pool'

    def __post_init__(self):
        if self.disc_interaction not in ("nmmp", "pool"):
            raise InvalidInputError(
                f"unknown disc_interaction mode {self.disc_interaction!r}"
            )


class PoolingAggregator(nn.Module):
    """Max-pool over actor embeddings broadcast back to each actor.

    Ablation stand-in for the graph module: v_i = MLP([h_i; max_j h_j]).
    """

    def __init__(self, in_dim: int, hidden: list[int], out_dim: int):
        super().__init__()
        self.mlp = make_mlp(2 * in_dim, hidden, out_dim)

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        pooled = h.max(dim=0, keepdim=True).values.expand_as(h)
        return self.mlp(torch.cat([h, pooled], dim=-1))


class TrajectoryGenerator(nn.Module):
    """Two-branch displacement generator over one scene."""

    def __init__(self, config: GeneratorConfig | None = None):
        super().__init__()
        cfg = config or GeneratorConfig()
        self.config = cfg
        g = cfg.graph
        self.encoder = MotionGraphEncoder(g)
        if cfg.interaction == "pool":
            self.pool = PoolingAggregator(g.lstm_hidden, list(g.mlp_hidden), g.embed_dim)
        if cfg.decoder_mode == "single":
            self.fuse = make_mlp(
                g.lstm_hidden + g.embed_dim, list(g.mlp_hidden), g.lstm_hidden
            )
        self.decoder_hidden = g.lstm_hidden + cfg.noise_dim
        self.decoder_input = make_mlp(2, list(g.mlp_hidden), g.embed_dim)
        self.decoder = nn.LSTMCell(g.embed_dim, self.decoder_hidden)
        self.head_individual = make_mlp(self.decoder_hidden, list(g.mlp_hidden), 2)
        self.head_interaction = make_mlp(g.embed_dim, list(g.mlp_hidden), 2 * cfg.t_pred)

    def forward(
        self, observed: torch.Tensor, noise: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Predict futures for one scene.

        observed: (N, t_obs+1, 2); noise: (N, noise_dim).
        Returns (predicted, individual_steps, interaction_steps), each
        (N, t_pred, 2), where predicted accumulates both step components from
        the current positions.
        """
        cfg = self.config
        n = observed.shape[0]
        if noise.shape != (n, cfg.noise_dim):
            raise InvalidInputError(
                f"noise must be ({n}, {cfg.noise_dim}), got {tuple(noise.shape)}"
            )
        h = self.encoder.embed_trajectories(observed)
        v = None
        if cfg.interaction == "nmmp":
            state = self.encoder.run_graph(h, observed[:, -1])
            v = state.node_embeddings
        elif cfg.interaction == "pool":
            v = self.pool(h)
        if v is not None and cfg.decoder_mode == "double":
            inter_steps = self.head_interaction(v).reshape(n, cfg.t_pred, 2)
        else:
            inter_steps = observed.new_zeros((n, cfg.t_pred, 2))
        if cfg.decoder_mode == "single":
            h = self.fuse(torch.cat([h, v], dim=-1))

        hx = torch.cat([h, noise], dim=-1)
        cx = torch.zeros_like(hx)
        prev_disp = observed.new_zeros((n, 2))
        positions = [observed[:, -1]]
        ind_steps = []
        for t in range(cfg.t_pred):
            hx, cx = self.decoder(self.decoder_input(prev_disp), (hx, cx))
            step_ind = self.head_individual(hx)
            ind_steps.append(step_ind)
            new_pos = positions[-1] + step_ind + inter_steps[:, t]
            prev_disp = new_pos - positions[-1]
            positions.append(new_pos)
        predicted = torch.stack(positions[1:], dim=1)
        individual = torch.stack(ind_steps, dim=1)
        return predicted, individual, inter_steps

    def sample(self, scene: SceneSample, seed: int | None = None) -> PredictionBatch:
        """Draw one stochastic prediction for a scene (frozen-weights path)."""
        gen = torch.Generator()
        if seed is not None:
            gen.manual_seed(seed)
        noise = torch.randn(
            scene.n_actors, self.config.noise_dim, generator=gen, dtype=torch.float32
        )
        return self.predict(scene, noise, noise_seed=seed)

    def predict(
        self, scene: SceneSample, noise: torch.Tensor, noise_seed: int | None = None
    ) -> PredictionBatch:
        observed = torch.as_tensor(
            scene.observed_array(), dtype=next(self.parameters()).dtype
        )
        with torch.no_grad():
            predicted, ind, inter = self.forward(observed, noise.to(observed.dtype))
        return PredictionBatch(
            predicted=predicted.numpy().astype(np.float64),
            individual_component=ind.numpy().astype(np.float64),
            interaction_component=inter.numpy().astype(np.float64),
            noise_seed=noise_seed,
        )


class TrajectoryDiscriminator(nn.Module):
    """Scores complete trajectories as real or fake, per actor.

    Pipeline: pointwise MLP on per-step displacements -> LSTM over time ->
    interaction aggregation over actors -> sigmoid classifier head.
    """

    def __init__(self, config: DiscriminatorConfig | None = None):
        super().__init__()
        cfg = config or DiscriminatorConfig()
        self.config = cfg
        g = cfg.graph
        self.point_encoder = make_mlp(2, list(g.mlp_hidden), cfg.point_embed_dim)
        self.lstm = nn.LSTM(cfg.point_embed_dim, g.lstm_hidden, batch_first=True)
        self.encoder = MotionGraphEncoder(g)
        if cfg.disc_interaction == "pool":
            self.pool = PoolingAggregator(g.lstm_hidden, list(g.mlp_hidden), g.embed_dim)
        self.classifier = make_mlp(g.embed_dim, list(g.mlp_hidden), 1)

    def forward(self, trajectories: torch.Tensor) -> torch.Tensor:
        """(N, t_obs+1+t_pred, 2) complete trajectories -> (N,) real probabilities."""
        if trajectories.ndim != 3 or trajectories.shape[-1] != 2:
            raise InvalidInputError(
                f"trajectories must be (N, T, 2), got {tuple(trajectories.shape)}"
            )
        disp = trajectories[:, 1:] - trajectories[:, :-1]
        steps = self.point_encoder(disp)
        _, (h_n, _) = self.lstm(steps)
        h = h_n[-1]
        if self.config.disc_interaction == "nmmp":
            state = self.encoder.run_graph(h, trajectories[:, -1])
            v = state.node_embeddings
        else:
            v = self.pool(h)
        logits = self.classifier(v).squeeze(-1)
        return torch.sigmoid(logits)


def generator_loss(predicted: torch.Tensor, future: torch.Tensor) -> torch.Tensor:
    """Sum over actors and timesteps of squared coordinate error."""
    if predicted.shape != future.shape:
        raise InvalidInputError(
            f"shape mismatch: {tuple(predicted.shape)} vs {tuple(future.shape)}"
        )
    return ((predicted - future) ** 2).sum()


def discriminator_loss(
    real_probs: torch.Tensor, fake_probs: torch.Tensor
) -> torch.Tensor:
    """Sum of log D(real) + log(1 - D(fake)); maximized by the discriminator."""
    real = real_probs.clamp(PROB_EPS, 1.0 - PROB_EPS)
    fake = fake_probs.clamp(PROB_EPS, 1.0 - PROB_EPS)
    return torch.log(real).sum() + torch.log(1.0 - fake).sum()


def adversarial_generator_term(fake_probs: torch.Tensor) -> torch.Tensor:
    """-log D(fake): added to the generator objective with a config weight."""
    fake = fake_probs.clamp(PROB_EPS, 1.0 - PROB_EPS)
    return -torch.log(fake).sum()


def with_t_pred(config: GeneratorConfig, t_pred: int) -> GeneratorConfig:
    return replace(config, t_pred=t_pred)
