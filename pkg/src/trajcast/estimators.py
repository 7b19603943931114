"""Scikit-learn style estimator wrappers around the two prediction systems.

`fit` consumes lists of scene samples (X) whose windows already carry the
ground-truth futures; `predict` returns per-scene predicted futures. Both
estimators expose `get_params`/`set_params` so they can be placed in sklearn
pipelines and grid searches.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import train as training
from .joint import JointConfig
from .metrics import MetricsReport, evaluate_scenes
from .raster import RasterSpec, rasterize
from .types import JointSceneSample, SceneSample

import torch


class PedestrianForecaster(BaseEstimator):
    """Adversarially trained pedestrian trajectory forecaster."""

    def __init__(
        self,
        epochs: int = 10,
        gen_lr: float = 1e-3,
        disc_lr: float = 1e-3,
        batch_size: int = 64,
        iterations: int = 5,
        embed_dim: int = 64,
        noise_dim: int = 8,
        variety_k: int = 0,
        adv_weight: float = 1.0,
        interaction: str = "nmmp",
        disc_interaction: str = "nmmp",
        decoder_mode: str = "double",
        seed: int = 0,
    ):
        self.epochs = epochs
        self.gen_lr = gen_lr
        self.disc_lr = disc_lr
        self.batch_size = batch_size
        self.iterations = iterations
        self.embed_dim = embed_dim
        self.noise_dim = noise_dim
        self.variety_k = variety_k
        self.adv_weight = adv_weight
        self.interaction = interaction
        self.disc_interaction = disc_interaction
        self.decoder_mode = decoder_mode
        self.seed = seed

    def _train_config(self) -> training.TrainConfig:
        return training.TrainConfig(
            epochs=self.epochs,
            gen_lr=self.gen_lr,
            disc_lr=self.disc_lr,
            batch_size=self.batch_size,
            iterations=self.iterations,
            embed_dim=self.embed_dim,
            noise_dim=self.noise_dim,
            variety_k=self.variety_k,
            adv_weight=self.adv_weight,
            interaction=self.interaction,
            disc_interaction=self.disc_interaction,
            decoder_mode=self.decoder_mode,
            seed=self.seed,
        )

    def fit(self, X: list[SceneSample], y=None):
        self.checkpoint_ = training.train_adversarial(X, self._train_config())
        self.generator_, self.discriminator_ = training.load_pedestrian_models(
            self.checkpoint_, X[0].t_pred
        )
        return self

    def _check_fitted(self):
        if not hasattr(self, "generator_"):
            raise NotFittedError("call fit before predict")

    def predict(self, X: list[SceneSample], seed: int = 0) -> list[np.ndarray]:
        self._check_fitted()
        return [self.generator_.sample(s, seed=seed + i).predicted for i, s in enumerate(X)]

    def score(self, X: list[SceneSample], y=None, k: int = 1, seed: int = 0) -> float:
        """Negative best-of-k ADE, so that larger is better per sklearn convention."""
        return -self.report(X, k=k, seed=seed).ade

    def report(self, X: list[SceneSample], k: int = 1, seed: int = 0) -> MetricsReport:
        self._check_fitted()
        return evaluate_scenes(self.generator_, X, k=k, seed=seed)


class JointForecaster(BaseEstimator):
    """Supervised joint pedestrian/vehicle forecaster with scene rasters."""

    def __init__(
        self,
        epochs: int = 10,
        joint_lr: float = 1e-3,
        batch_size: int = 8,
        iterations: int = 5,
        embed_dim: int = 64,
        lam: float = 0.5,
        seed: int = 0,
        raster_size: int = 500,
        raster_resolution: float = 0.2,
    ):
        self.epochs = epochs
        self.joint_lr = joint_lr
        self.batch_size = batch_size
        self.iterations = iterations
        self.embed_dim = embed_dim
        self.lam = lam
        self.seed = seed
        self.raster_size = raster_size
        self.raster_resolution = raster_resolution

    def _raster_spec(self) -> RasterSpec:
        return RasterSpec(
            size_px=(self.raster_size, self.raster_size),
            resolution=self.raster_resolution,
        )

    def fit(self, X: list[JointSceneSample], y=None):
        config = training.TrainConfig(
            epochs=self.epochs,
            joint_lr=self.joint_lr,
            batch_size=self.batch_size,
            iterations=self.iterations,
            embed_dim=self.embed_dim,
            lam=self.lam,
            seed=self.seed,
        )
        self.joint_config_ = JointConfig(
            graph=config.graph_config(),
            t_obs=X[0].scene.t_obs,
            t_pred=X[0].scene.t_pred,
            raster_size=self.raster_size,
        )
        self.checkpoint_ = training.train_joint(
            X, config, joint_config=self.joint_config_, raster_spec=self._raster_spec()
        )
        self.model_ = training.load_joint_model(self.checkpoint_, self.joint_config_)
        return self

    def predict(self, X: list[JointSceneSample]) -> list[np.ndarray]:
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before predict")
        spec = self._raster_spec()
        out = []
        for sample in X:
            raster = torch.as_tensor(rasterize(sample, spec).to_tensor())
            out.append(self.model_.predict(sample, raster).predicted)
        return out
