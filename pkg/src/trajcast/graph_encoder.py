"""Directed interaction-graph encoder for multi-actor motion.

Encodes each actor's observed displacements with an MLP + LSTM, builds a
fully-connected directed graph over the actors of a scene, and alternates
edge-to-node / node-to-edge update rounds to produce interacted actor
embeddings and per-ordered-pair interaction embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn

from .types import InvalidInputError


def make_mlp(in_dim: int, hidden: list[int], out_dim: int) -> nn.Sequential:
    """Two-layer-style MLP: Linear/ReLU pairs for each hidden width, then Linear."""
    layers: list[nn.Module] = []
    prev = in_dim
    for width in hidden:
        layers.append(nn.Linear(prev, width))
        layers.append(nn.ReLU())
        prev = width
    layers.append(nn.Linear(prev, out_dim))
    return nn.Sequential(*layers)


@dataclass(frozen=True)
class GraphEncoderConfig:
    """Capacity knobs for the interaction-graph encoder.

    `iterations` is the number of message-passing rounds; each round carries
    its own node/edge update weights (no sharing across rounds).
    """

    embed_dim: int = 64
    iterations: int = 5
    lstm_hidden: int = 64
    mlp_hidden: list[int] = field(default_factory=lambda: [64])

    def __post_init__(self):
        if self.embed_dim < 1:
            raise InvalidInputError("embed_dim must be >= 1")
        if self.iterations < 0:
            raise InvalidInputError("iterations must be >= 0")
        if self.lstm_hidden < 1:
            raise InvalidInputError("lstm_hidden must be >= 1")


@dataclass
class InteractionGraphState:
    """Node and directed edge embeddings of the graph at one round.

    `edge_embeddings` is an (N, N, D) tensor; entry [i, j] is the embedding of
    the directed edge i -> j, and the diagonal is unused. For N == 1 the edge
    set is empty.
    """

    node_embeddings: torch.Tensor   # (N, D)
    edge_embeddings: torch.Tensor   # (N, N, D)

    @property
    def n_actors(self) -> int:
        return self.node_embeddings.shape[0]

    @property
    def in_degree(self) -> torch.Tensor:
        n = self.n_actors
        return torch.full((n,), max(n - 1, 0), dtype=torch.long)

    @property
    def out_degree(self) -> torch.Tensor:
        return self.in_degree

    def edge_map(self) -> dict[tuple[int, int], torch.Tensor]:
        """Directed edge embeddings as an ordered-pair dict (no self loops)."""
        n = self.n_actors
        return {
            (i, j): self.edge_embeddings[i, j]
            for i in range(n)
            for j in range(n)
            if i != j
        }


@dataclass
class GraphEncoding:
    """Final output: trajectory, actor, and interaction embeddings."""

    trajectory_embeddings: torch.Tensor  # (N, lstm_hidden)
    actor_embeddings: torch.Tensor       # (N, D)
    interaction_embeddings: torch.Tensor  # (N, N, D), diagonal unused

    def interaction_map(self) -> dict[tuple[int, int], torch.Tensor]:
        n = self.actor_embeddings.shape[0]
        return {
            (i, j): self.interaction_embeddings[i, j]
            for i in range(n)
            for j in range(n)
            if i != j
        }


class MotionGraphEncoder(nn.Module):
    """Trajectory embedding + K rounds of directed graph message passing."""

    def __init__(self, config: GraphEncoderConfig | None = None):
        super().__init__()
        cfg = config or GraphEncoderConfig()
        self.config = cfg
        d, w = cfg.embed_dim, list(cfg.mlp_hidden)
        self.displacement_encoder = make_mlp(2, w, d)
        self.lstm = nn.LSTM(d, cfg.lstm_hidden, batch_first=True)
        self.offset_encoder = make_mlp(2, w, d)
        self.node_init = make_mlp(cfg.lstm_hidden, w, d)
        self.edge_init = make_mlp(3 * d, w, d)
        self.node_updates = nn.ModuleList(
            make_mlp(2 * d, w, d) for _ in range(cfg.iterations)
        )
        self.edge_updates = nn.ModuleList(
            make_mlp(2 * d, w, d) for _ in range(cfg.iterations)
        )

    def embed_trajectories(self, observed: torch.Tensor) -> torch.Tensor:
        """Map (N, t_obs+1, 2) observed coordinates to (N, lstm_hidden) embeddings.

        Consumes only per-step displacements, so the result is invariant to
        translating the whole window.
        """
        if observed.ndim != 3 or observed.shape[-1] != 2:
            raise InvalidInputError(
                f"observed must be (N, T, 2), got {tuple(observed.shape)}"
            )
        if observed.shape[1] < 2:
            raise InvalidInputError("need at least 2 observed positions per actor")
        if not torch.all(torch.isfinite(observed)):
            raise InvalidInputError("observed coordinates must be finite")
        disp = observed[:, 1:] - observed[:, :-1]
        steps = self.displacement_encoder(disp)
        _, (h_n, _) = self.lstm(steps)
        return h_n[-1]

    def init_graph(
        self, trajectory_embeddings: torch.Tensor, current_positions: torch.Tensor
    ) -> InteractionGraphState:
        """Build the round-0 state of the fully-connected directed graph."""
        n = trajectory_embeddings.shape[0]
        v0 = self.node_init(trajectory_embeddings)
        d = v0.shape[-1]
        if n == 1:
            edges = v0.new_zeros((1, 1, d))
            return InteractionGraphState(v0, edges)
        # pairwise current-position offsets p_i - p_j, encoded per ordered pair
        offsets = current_positions[:, None, :] - current_positions[None, :, :]
        spatial = self.offset_encoder(offsets)  # (N, N, D)
        vi = v0[:, None, :].expand(n, n, d)
        vj = v0[None, :, :].expand(n, n, d)
        edges = self.edge_init(torch.cat([vi, vj, spatial], dim=-1))
        edges = edges * _offdiag_mask(n, edges)
        return InteractionGraphState(v0, edges)

    def message_passing_round(
        self, state: InteractionGraphState, k: int
    ) -> InteractionGraphState:
        """One edge-to-node then node-to-edge update with round-k weights."""
        n = state.n_actors
        if n == 1:
            return state
        if not 0 <= k < len(self.node_updates):
            raise InvalidInputError(f"round index {k} out of range")
        e = state.edge_embeddings
        degree = float(n - 1)
        incoming = e.sum(dim=0) / degree   # mean over j of e[j, i]
        outgoing = e.sum(dim=1) / degree   # mean over j of e[i, j]
        v = self.node_updates[k](torch.cat([incoming, outgoing], dim=-1))
        d = v.shape[-1]
        vi = v[:, None, :].expand(n, n, d)
        vj = v[None, :, :].expand(n, n, d)
        new_e = self.edge_updates[k](torch.cat([vi, vj], dim=-1))
        new_e = new_e * _offdiag_mask(n, new_e)
        return InteractionGraphState(v, new_e)

    def run_graph(
        self, trajectory_embeddings: torch.Tensor, current_positions: torch.Tensor
    ) -> InteractionGraphState:
        state = self.init_graph(trajectory_embeddings, current_positions)
        for k in range(self.config.iterations):
            state = self.message_passing_round(state, k)
        return state

    def forward(self, observed: torch.Tensor) -> GraphEncoding:
        """Full pipeline: (N, t_obs+1, 2) observed coordinates -> GraphEncoding."""
        if observed.shape[0] < 1:
            raise InvalidInputError("need at least one actor")
        h = self.embed_trajectories(observed)
        state = self.run_graph(h, observed[:, -1])
        return GraphEncoding(h, state.node_embeddings, state.edge_embeddings)


def _offdiag_mask(n: int, like: torch.Tensor) -> torch.Tensor:
    """(N, N, 1) mask zeroing the (unused) diagonal entries."""
    eye = torch.eye(n, dtype=like.dtype, device=like.device)
    return (1.0 - eye)[:, :, None]
