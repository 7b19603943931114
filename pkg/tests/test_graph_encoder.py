import numpy as np
import pytest
import torch

from trajcast.graph_encoder import (
    GraphEncoderConfig,
    InteractionGraphState,
    MotionGraphEncoder,
)
from trajcast.types import InvalidInputError

from conftest import finite_difference_check, tiny_graph_config


def random_observed(n, t_obs=8, seed=0):
    rng = np.random.default_rng(seed)
    return torch.as_tensor(rng.normal(0, 1, size=(n, t_obs + 1, 2)), dtype=torch.float32)


# --- trajectory embedding ---------------------------------------------------

def test_stationary_actor_matches_zero_displacements():
    enc = MotionGraphEncoder(tiny_graph_config())
    stationary = torch.full((1, 9, 2), 3.7)
    zeros = torch.zeros(1, 9, 2)
    h1 = enc.embed_trajectories(stationary)
    h2 = enc.embed_trajectories(zeros)
    assert torch.allclose(h1, h2, atol=1e-7)


def test_translation_invariant_embedding():
    enc = MotionGraphEncoder(tiny_graph_config())
    obs = random_observed(3)
    shifted = obs + torch.tensor([100.0, -3.5])
    assert torch.allclose(
        enc.embed_trajectories(obs), enc.embed_trajectories(shifted), atol=1e-6
    )


def test_embedding_rejects_bad_input():
    enc = MotionGraphEncoder(tiny_graph_config())
    with pytest.raises(InvalidInputError):
        enc.embed_trajectories(torch.full((1, 9, 2), float("nan")))
    with pytest.raises(InvalidInputError):
        enc.embed_trajectories(torch.zeros(1, 9, 3))
    with pytest.raises(InvalidInputError):
        enc.embed_trajectories(torch.zeros(1, 1, 2))


def _manual_lstm(inputs, w_ih, w_hh, b_ih, b_hh, hidden):
    """Hand-unrolled LSTM recurrence (gate order i, f, g, o as in torch)."""

    def sigmoid(x):
        return 1.0 / (1.0 + np.exp(-x))

    h = np.zeros(hidden)
    c = np.zeros(hidden)
    for x in inputs:
        gates = w_ih @ x + b_ih + w_hh @ h + b_hh
        i, f, g, o = np.split(gates, 4)
        i, f, o = sigmoid(i), sigmoid(f), sigmoid(o)
        g = np.tanh(g)
        c = f * c + i * g
        h = o * np.tanh(c)
    return h


def test_embedding_matches_hand_unrolled_lstm():
    # f_temp forced to the identity on 2-D inputs, LSTM with fixed weights
    cfg = GraphEncoderConfig(embed_dim=2, iterations=0, lstm_hidden=3, mlp_hidden=[2])
    enc = MotionGraphEncoder(cfg).double()
    with torch.no_grad():
        # two-layer MLP [Linear, ReLU, Linear]; realize identity via +/- split
        lin1, _, lin2 = enc.displacement_encoder
        lin1.weight.copy_(torch.tensor([[1.0, 0], [0, 1.0]]))
        lin1.bias.zero_()
        lin2.weight.copy_(torch.tensor([[1.0, 0], [0, 1.0]]))
        lin2.bias.zero_()
        rng = np.random.default_rng(42)
        w_ih = rng.normal(0, 0.5, size=(12, 2))
        w_hh = rng.normal(0, 0.5, size=(12, 3))
        b_ih = rng.normal(0, 0.5, size=12)
        b_hh = rng.normal(0, 0.5, size=12)
        enc.lstm.weight_ih_l0.copy_(torch.as_tensor(w_ih))
        enc.lstm.weight_hh_l0.copy_(torch.as_tensor(w_hh))
        enc.lstm.bias_ih_l0.copy_(torch.as_tensor(b_ih))
        enc.lstm.bias_hh_l0.copy_(torch.as_tensor(b_hh))

    displacements = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    observed = np.vstack([[0.0, 0.0], np.cumsum(displacements, axis=0)])
    # identity only holds for non-negative inputs through the ReLU; these are
    expected = _manual_lstm(displacements, w_ih, w_hh, b_ih, b_hh, hidden=3)
    h = enc.embed_trajectories(torch.as_tensor(observed[None], dtype=torch.float64))
    np.testing.assert_allclose(h[0].detach().numpy(), expected, atol=1e-9)


# --- graph initialization ---------------------------------------------------

def test_single_actor_graph_has_no_edges():
    enc = MotionGraphEncoder(tiny_graph_config())
    obs = random_observed(1)
    h = enc.embed_trajectories(obs)
    state = enc.init_graph(h, obs[:, -1])
    assert state.node_embeddings.shape[0] == 1
    assert state.edge_map() == {}
    assert state.in_degree.tolist() == [0]


def test_three_actor_graph_is_complete_directed():
    enc = MotionGraphEncoder(tiny_graph_config())
    obs = random_observed(3)
    h = enc.embed_trajectories(obs)
    state = enc.init_graph(h, obs[:, -1])
    edges = state.edge_map()
    assert len(edges) == 6
    assert state.in_degree.tolist() == [2, 2, 2]
    assert state.out_degree.tolist() == [2, 2, 2]


def test_coincident_actors_still_have_directed_edges():
    enc = MotionGraphEncoder(tiny_graph_config())
    obs = random_observed(2, seed=3)
    obs[1, -1] = obs[0, -1]  # identical current positions
    h = enc.embed_trajectories(obs)
    state = enc.init_graph(h, obs[:, -1])
    e12, e21 = state.edge_embeddings[0, 1], state.edge_embeddings[1, 0]
    assert torch.norm(e12 - e21) > 1e-6  # concatenation order differs


# --- message-passing rounds -------------------------------------------------

def test_round_is_identity_for_single_actor():
    enc = MotionGraphEncoder(tiny_graph_config())
    state = InteractionGraphState(torch.randn(1, 8), torch.zeros(1, 1, 8))
    out = enc.message_passing_round(state, 0)
    assert torch.equal(out.node_embeddings, state.node_embeddings)
    assert torch.equal(out.edge_embeddings, state.edge_embeddings)


def test_constant_edges_collapse_nodes():
    enc = MotionGraphEncoder(tiny_graph_config())
    n, d = 4, 8
    c = torch.randn(d)
    edges = c.expand(n, n, d).clone()
    edges = edges * (1.0 - torch.eye(n))[:, :, None]
    state = InteractionGraphState(torch.randn(n, d), edges)
    out = enc.message_passing_round(state, 0)
    for i in range(1, n):
        assert torch.allclose(out.node_embeddings[0], out.node_embeddings[i], atol=1e-6)


def _relu(x):
    return np.maximum(x, 0.0)


def test_two_node_round_matches_matrix_oracle():
    cfg = GraphEncoderConfig(embed_dim=2, iterations=1, lstm_hidden=2, mlp_hidden=[2])
    enc = MotionGraphEncoder(cfg).double()
    rng = np.random.default_rng(7)
    wv1, bv1 = rng.normal(size=(2, 4)), rng.normal(size=2)
    wv2, bv2 = rng.normal(size=(2, 2)), rng.normal(size=2)
    we1, be1 = rng.normal(size=(2, 4)), rng.normal(size=2)
    we2, be2 = rng.normal(size=(2, 2)), rng.normal(size=2)
    with torch.no_grad():
        nv = enc.node_updates[0]
        nv[0].weight.copy_(torch.as_tensor(wv1)); nv[0].bias.copy_(torch.as_tensor(bv1))
        nv[2].weight.copy_(torch.as_tensor(wv2)); nv[2].bias.copy_(torch.as_tensor(bv2))
        ne = enc.edge_updates[0]
        ne[0].weight.copy_(torch.as_tensor(we1)); ne[0].bias.copy_(torch.as_tensor(be1))
        ne[2].weight.copy_(torch.as_tensor(we2)); ne[2].bias.copy_(torch.as_tensor(be2))

    v = rng.normal(size=(2, 2))
    e = np.zeros((2, 2, 2))
    e[0, 1] = rng.normal(size=2)
    e[1, 0] = rng.normal(size=2)
    state = InteractionGraphState(
        torch.as_tensor(v), torch.as_tensor(e)
    )
    with torch.no_grad():
        out = enc.message_passing_round(state, 0)

    def mlp(x, w1, b1, w2, b2):
        return w2 @ _relu(w1 @ x + b1) + b2

    # degree 1: incoming aggregate for node i is e[j, i], outgoing is e[i, j]
    v_new = np.stack(
        [
            mlp(np.concatenate([e[1, 0], e[0, 1]]), wv1, bv1, wv2, bv2),
            mlp(np.concatenate([e[0, 1], e[1, 0]]), wv1, bv1, wv2, bv2),
        ]
    )
    e01 = mlp(np.concatenate([v_new[0], v_new[1]]), we1, be1, we2, be2)
    e10 = mlp(np.concatenate([v_new[1], v_new[0]]), we1, be1, we2, be2)
    np.testing.assert_allclose(out.node_embeddings.numpy(), v_new, atol=1e-9)
    np.testing.assert_allclose(out.edge_embeddings[0, 1].numpy(), e01, atol=1e-9)
    np.testing.assert_allclose(out.edge_embeddings[1, 0].numpy(), e10, atol=1e-9)


# --- full pipeline ----------------------------------------------------------

def test_zero_rounds_returns_initial_embeddings():
    enc = MotionGraphEncoder(tiny_graph_config(iterations=0))
    obs = random_observed(4)
    out = enc(obs)
    h = enc.embed_trajectories(obs)
    assert torch.allclose(out.actor_embeddings, enc.node_init(h), atol=1e-7)


def test_permutation_equivariance():
    enc = MotionGraphEncoder(tiny_graph_config(iterations=3))
    obs = random_observed(5, seed=11)
    out = enc(obs)
    perm = torch.tensor([3, 0, 4, 1, 2])
    out_p = enc(obs[perm])
    assert torch.allclose(out.actor_embeddings[perm], out_p.actor_embeddings, atol=1e-6)
    assert torch.allclose(
        out.interaction_embeddings[perm][:, perm], out_p.interaction_embeddings,
        atol=1e-6,
    )


def test_translation_invariance_full():
    enc = MotionGraphEncoder(tiny_graph_config(iterations=2))
    obs = random_observed(4, seed=5)
    out = enc(obs)
    out_t = enc(obs + torch.tensor([53.0, -17.0]))
    assert torch.allclose(out.actor_embeddings, out_t.actor_embeddings, atol=1e-6)
    assert torch.allclose(
        out.interaction_embeddings, out_t.interaction_embeddings, atol=1e-6
    )


def test_directedness_holds_generically():
    hits = 0
    for trial in range(20):
        torch.manual_seed(trial)
        enc = MotionGraphEncoder(tiny_graph_config(iterations=1))
        obs = random_observed(3, seed=trial)
        out = enc(obs)
        if torch.norm(out.interaction_embeddings[0, 1] - out.interaction_embeddings[1, 0]) > 1e-6:
            hits += 1
    assert hits >= 19


def test_gradients_match_finite_differences():
    cfg = GraphEncoderConfig(embed_dim=4, iterations=2, lstm_hidden=4, mlp_hidden=[4])
    enc = MotionGraphEncoder(cfg).double()
    obs = torch.as_tensor(
        np.random.default_rng(1).normal(size=(3, 5, 2)), dtype=torch.float64
    )
    target = torch.as_tensor(
        np.random.default_rng(2).normal(size=(3, 4)), dtype=torch.float64
    )

    def loss_fn():
        out = enc(obs)
        return ((out.actor_embeddings - target) ** 2).sum() + (
            out.interaction_embeddings**2
        ).sum()

    worst = finite_difference_check(loss_fn, list(enc.parameters()))
    assert worst < 1e-4
