import numpy as np
import pytest
import torch

from trajcast.graph_encoder import GraphEncoderConfig
from trajcast.types import ActorType, JointSceneSample, SceneSample, TrajectoryWindow


def tiny_graph_config(embed_dim=8, iterations=2, lstm_hidden=8):
    return GraphEncoderConfig(
        embed_dim=embed_dim,
        iterations=iterations,
        lstm_hidden=lstm_hidden,
        mlp_hidden=[8],
    )


def make_scene(n_actors, t_obs=8, t_pred=12, seed=0, units="meters"):
    rng = np.random.default_rng(seed)
    windows = []
    for i in range(n_actors):
        start = rng.uniform(-10, 10, size=2)
        steps = rng.normal(0, 0.5, size=(t_obs + t_pred, 2))
        track = np.vstack([start, start + np.cumsum(steps, axis=0)])
        windows.append(
            TrajectoryWindow(
                actor_id=i, observed=track[: t_obs + 1], future=track[t_obs + 1 :]
            )
        )
    return SceneSample(windows=windows, units=units)


def make_joint_scene(n_actors=3, t_obs=5, t_pred=4, seed=0):
    rng = np.random.default_rng(seed)
    actors = []
    types = [ActorType.VEHICLE, ActorType.PEDESTRIAN, ActorType.OTHER]
    for i in range(n_actors):
        start = rng.uniform(-15, 15, size=2)
        steps = rng.normal(0, 0.3, size=(t_obs + t_pred, 2))
        track = np.vstack([start, start + np.cumsum(steps, axis=0)])
        actors.append(
            TrajectoryWindow(
                actor_id=i,
                observed=track[: t_obs + 1],
                future=track[t_obs + 1 :],
                timestep=0.1,
                actor_type=types[i % len(types)],
                heading=float(rng.uniform(-np.pi, np.pi)),
            )
        )
    return JointSceneSample(actors=actors)


def finite_difference_check(loss_fn, params, step=1e-5):
    """Max relative error between autograd and central-difference gradients.

    `params` are float64 leaf tensors with requires_grad; `loss_fn()` must be
    a pure function of them.
    """
    loss = loss_fn()
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    grads = [
        g if g is not None else torch.zeros_like(p) for g, p in zip(grads, params)
    ]
    worst = 0.0
    for p, g in zip(params, grads):
        flat = p.detach().reshape(-1)
        g_flat = g.reshape(-1)
        for idx in range(flat.shape[0]):
            orig = flat[idx].item()
            with torch.no_grad():
                flat[idx] = orig + step
                up = loss_fn().item()
                flat[idx] = orig - step
                down = loss_fn().item()
                flat[idx] = orig
            fd = (up - down) / (2 * step)
            analytic = g_flat[idx].item()
            # floor keeps FD roundoff on (near-)zero entries from dominating
            scale = max(abs(fd), abs(analytic), 1e-3)
            worst = max(worst, abs(fd - analytic) / scale)
    return worst


@pytest.fixture(autouse=True)
def _deterministic_torch():
    torch.manual_seed(0)
    torch.set_num_threads(1)
    yield
