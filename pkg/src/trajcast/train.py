"""Optimization loops: adversarial pedestrian training and supervised joint training."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import torch

from . import checkpoint as ckpt_io
from .graph_encoder import GraphEncoderConfig
from .joint import JointConfig, JointForecastModel, joint_loss, prepare_joint_inputs
from .pedestrian import (
    DiscriminatorConfig,
    GeneratorConfig,
    TrajectoryDiscriminator,
    TrajectoryGenerator,
    adversarial_generator_term,
    discriminator_loss,
    generator_loss,
)
from .raster import RasterSpec, rasterize
from .types import InvalidInputError, JointSceneSample, SceneSample


class DivergenceError(RuntimeError):
    """Raised when a training loss goes non-finite; carries a diagnostic checkpoint."""

    def __init__(self, message: str, checkpoint: ckpt_io.Checkpoint):
        super().__init__(message)
        self.checkpoint = checkpoint


@dataclass(frozen=True)
class TrainConfig:
    gen_lr: float = 1e-3
    disc_lr: float = 1e-3
    joint_lr: float = 1e-3
    batch_size: int = 64
    epochs: int = 10
    lam: float = 0.5            # individual-vs-final loss mix for the joint system
    variety_k: int = 0          # 0 = plain L2; k>0 = best-of-k variety loss
    adv_weight: float = 1.0     # weight of the -log D(fake) generator term
    iterations: int = 5         # message-passing rounds
    embed_dim: int = 64
    lstm_hidden: int = 64
    noise_dim: int = 8
    seed: int = 0
    interaction: str = "nmmp"
    disc_interaction: str = "nmmp"
    decoder_mode: str = "double"

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidInputError("lam must lie in [0, 1]")
        if self.variety_k < 0:
            raise InvalidInputError("variety_k must be >= 0")

    def graph_config(self) -> GraphEncoderConfig:
        return GraphEncoderConfig(
            embed_dim=self.embed_dim,
            iterations=self.iterations,
            lstm_hidden=self.lstm_hidden,
        )

    def generator_config(self, t_pred: int) -> GeneratorConfig:
        return GeneratorConfig(
            graph=self.graph_config(),
            noise_dim=self.noise_dim,
            t_pred=t_pred,
            interaction=self.interaction,
            decoder_mode=self.decoder_mode,
        )

    def discriminator_config(self) -> DiscriminatorConfig:
        return DiscriminatorConfig(
            graph=self.graph_config(), disc_interaction=self.disc_interaction
        )


def _seed_all(seed: int) -> None:
    torch.manual_seed(seed)
    np.random.seed(seed % (2**32))


def _batches(items: list, size: int):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def _guard(value: float, models: dict, optimizers: dict, config: TrainConfig, history):
    if math.isfinite(value):
        return
    diag = build_checkpoint(models, optimizers, config, history)
    raise DivergenceError(f"non-finite training loss ({value})", diag)


def build_checkpoint(
    models: dict[str, torch.nn.Module],
    optimizers: dict[str, torch.optim.Optimizer],
    config: TrainConfig,
    history: list,
) -> ckpt_io.Checkpoint:
    tensors = ckpt_io.collect_tensors(models)
    scalars: dict[str, float] = {}
    for prefix, opt in optimizers.items():
        t, s = ckpt_io.collect_optimizer(prefix, opt)
        tensors.update(t)
        scalars.update(s)
    return ckpt_io.Checkpoint(
        tensors=tensors,
        config=asdict(config),
        optimizer_scalars=scalars,
        rng_state=ckpt_io.encode_rng(torch.get_rng_state()),
        metrics_history=list(history),
    )


def restore_training_state(
    ckpt: ckpt_io.Checkpoint,
    models: dict[str, torch.nn.Module],
    optimizers: dict[str, torch.optim.Optimizer] | None = None,
) -> None:
    ckpt_io.restore_tensors(ckpt, models)
    for prefix, opt in (optimizers or {}).items():
        ckpt_io.restore_optimizer(prefix, opt, ckpt)
    if ckpt.rng_state is not None:
        torch.set_rng_state(ckpt_io.decode_rng(ckpt.rng_state))


def config_from_checkpoint(ckpt: ckpt_io.Checkpoint) -> TrainConfig:
    known = {f.name for f in TrainConfig.__dataclass_fields__.values()}
    return TrainConfig(**{k: v for k, v in ckpt.config.items() if k in known})


def build_pedestrian_models(config: TrainConfig, t_pred: int):
    generator = TrajectoryGenerator(config.generator_config(t_pred))
    discriminator = TrajectoryDiscriminator(config.discriminator_config())
    return generator, discriminator


def train_adversarial(
    scenes: list[SceneSample],
    config: TrainConfig,
    max_steps: int | None = None,
    resume: ckpt_io.Checkpoint | None = None,
) -> ckpt_io.Checkpoint:
    """Alternate one discriminator ascent step and one generator descent step per batch."""
    if not scenes:
        raise InvalidInputError("need at least one training scene")
    _seed_all(config.seed)
    t_pred = scenes[0].t_pred
    generator, discriminator = build_pedestrian_models(config, t_pred)
    opt_g = torch.optim.Adam(generator.parameters(), lr=config.gen_lr)
    opt_d = torch.optim.Adam(discriminator.parameters(), lr=config.disc_lr)
    models = {"generator": generator, "discriminator": discriminator}
    optimizers = {"generator": opt_g, "discriminator": opt_d}
    history: list[dict] = []
    if resume is not None:
        history = list(resume.metrics_history)
        restore_training_state(resume, models, optimizers)

    def gen_losses(batch):
        total_l2 = torch.zeros(())
        total_adv = torch.zeros(())
        for scene in batch:
            observed = torch.as_tensor(scene.observed_array(), dtype=torch.float32)
            future = torch.as_tensor(scene.future_array(), dtype=torch.float32)
            draws = max(config.variety_k, 1)
            candidates = []
            for _ in range(draws):
                noise = torch.randn(scene.n_actors, config.noise_dim)
                pred, _, _ = generator(observed, noise)
                candidates.append((generator_loss(pred, future), pred))
            l2 = torch.stack([c[0] for c in candidates]).min()
            pred = min(candidates, key=lambda c: float(c[0].detach()))[1]
            total_l2 = total_l2 + l2
            if config.adv_weight > 0:
                complete = torch.cat([observed, pred], dim=1)
                total_adv = total_adv + adversarial_generator_term(discriminator(complete))
        return total_l2, total_adv

    step = 0
    done = False
    for _ in range(config.epochs):
        if done:
            break
        epoch_l2 = 0.0
        # with no adversarial coupling and a frozen discriminator the D step
        # cannot affect the run; skip it for speed
        run_disc = config.disc_lr > 0 or config.adv_weight > 0
        for batch in _batches(scenes, config.batch_size):
            # discriminator step (ascend L_D)
            d_obj = torch.zeros(())
            for scene in batch if run_disc else []:
                observed = torch.as_tensor(scene.observed_array(), dtype=torch.float32)
                future = torch.as_tensor(scene.future_array(), dtype=torch.float32)
                noise = torch.randn(scene.n_actors, config.noise_dim)
                with torch.no_grad():
                    fake, _, _ = generator(observed, noise)
                real_p = discriminator(torch.cat([observed, future], dim=1))
                fake_p = discriminator(torch.cat([observed, fake], dim=1))
                d_obj = d_obj + discriminator_loss(real_p, fake_p)
            if run_disc:
                opt_d.zero_grad()
                (-d_obj).backward()
                opt_d.step()

            # generator step (descend L_G + adv_weight * adversarial term)
            l2, adv = gen_losses(batch)
            g_obj = l2 + config.adv_weight * adv
            opt_g.zero_grad()
            g_obj.backward()
            opt_g.step()

            g_val = float(g_obj.detach())
            d_val = float(d_obj.detach())
            _guard(g_val + d_val, models, optimizers, config, history)
            epoch_l2 += float(l2.detach())
            step += 1
            history.append({"step": step, "l_g": float(l2.detach()), "l_d": d_val})
            if max_steps is not None and step >= max_steps:
                done = True
                break
    return build_checkpoint(models, optimizers, config, history)


def train_joint(
    samples: list[JointSceneSample],
    config: TrainConfig,
    joint_config: JointConfig | None = None,
    raster_spec: RasterSpec | None = None,
    resume: ckpt_io.Checkpoint | None = None,
) -> ckpt_io.Checkpoint:
    """Supervised epoch loop minimizing the two-term joint loss."""
    if not samples:
        raise InvalidInputError("need at least one training sample")
    _seed_all(config.seed)
    jc = joint_config or JointConfig(
        graph=config.graph_config(),
        t_obs=samples[0].scene.t_obs,
        t_pred=samples[0].scene.t_pred,
    )
    model = JointForecastModel(jc)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.joint_lr)
    models = {"joint": model}
    optimizers = {"joint": optimizer}
    history: list[dict] = []
    if resume is not None:
        history = list(resume.metrics_history)
        restore_training_state(resume, models, optimizers)
    spec = raster_spec or RasterSpec()
    rasters = [
        torch.as_tensor(rasterize(s, spec).to_tensor(), dtype=torch.float32)
        for s in samples
    ]

    for epoch in range(len(history), len(history) + config.epochs):
        epoch_loss = 0.0
        for batch_idx in _batches(list(range(len(samples))), config.batch_size):
            loss = torch.zeros(())
            for i in batch_idx:
                sample = samples[i]
                inputs = prepare_joint_inputs(sample)
                future = torch.as_tensor(
                    sample.scene.future_array(), dtype=torch.float32
                )
                predicted, z_ind, _ = model(*inputs, rasters[i])
                loss = loss + joint_loss(predicted, z_ind, future, config.lam)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            _guard(float(loss.detach()), models, optimizers, config, history)
            epoch_loss += float(loss.detach())
        history.append({"epoch": epoch, "loss": epoch_loss / max(len(samples), 1)})
    return build_checkpoint(models, optimizers, config, history)


def load_pedestrian_models(ckpt: ckpt_io.Checkpoint, t_pred: int):
    config = config_from_checkpoint(ckpt)
    generator, discriminator = build_pedestrian_models(config, t_pred)
    ckpt_io.restore_tensors(
        ckpt, {"generator": generator, "discriminator": discriminator}
    )
    generator.eval()
    discriminator.eval()
    return generator, discriminator


def load_joint_model(
    ckpt: ckpt_io.Checkpoint, joint_config: JointConfig | None = None
) -> JointForecastModel:
    config = config_from_checkpoint(ckpt)
    model = JointForecastModel(joint_config or JointConfig(graph=config.graph_config()))
    ckpt_io.restore_tensors(ckpt, {"joint": model})
    model.eval()
    return model
