"""Command-line entry points for training, evaluation, prediction, and figures.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric divergence.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path

import click
import numpy as np
import yaml

from . import checkpoint as ckpt_io
from . import data as datasets
from . import train as training
from . import viz
from .metrics import crowd_split_report, evaluate_scenes
from .types import InvalidInputError

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGENCE = 4


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


_TRAIN_KEYS = {f.name for f in dataclass_fields(training.TrainConfig)}
_PROTOCOL_KEYS = {"t_obs", "t_pred", "timestep", "stride", "units", "system", "k"}


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(p) as fh:
        obj = yaml.safe_load(fh) or {}
    if not isinstance(obj, dict):
        raise ConfigError("config must be a flat mapping")
    unknown = set(obj) - _TRAIN_KEYS - _PROTOCOL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return obj


def train_config_from(cfg: dict, seed: int | None) -> training.TrainConfig:
    kwargs = {k: v for k, v in cfg.items() if k in _TRAIN_KEYS}
    if seed is not None:
        kwargs["seed"] = seed
    try:
        return training.TrainConfig(**kwargs)
    except (TypeError, InvalidInputError) as exc:
        raise ConfigError(str(exc)) from None


def resolve_scenes(dataset: str, split: str | None, cfg: dict):
    """Load pedestrian scenes from a manifest; returns (train, test, units)."""
    path = Path(dataset)
    if not path.exists():
        raise DataError(f"dataset path not found: {dataset}")
    manifest = datasets.load_manifest(path)
    units = cfg.get("units", "meters")
    protocol = {
        "t_obs": cfg.get("t_obs", 8),
        "t_pred": cfg.get("t_pred", 12),
        "timestep": cfg.get("timestep", 0.4),
        "stride": cfg.get("stride", 1),
        "units": units,
    }
    sets: dict[str, list] = {}
    for name, files in manifest.items():
        scenes = []
        for f in files:
            fp = Path(f)
            if not fp.is_absolute():
                fp = path.parent / fp
            if not fp.exists():
                raise DataError(f"dataset file not found: {fp}")
            records = datasets.parse_trajectory_file(fp, units=units)
            scenes.extend(datasets.window_scenes(records, **protocol))
        sets[name] = scenes
    if split is None:
        all_scenes = [s for scenes in sets.values() for s in scenes]
        return all_scenes, all_scenes, units
    if split not in sets:
        raise DataError(f"unknown split {split!r}; manifest has {sorted(sets)}")
    train = [s for name, scenes in sets.items() if name != split for s in scenes]
    return train, sets[split], units


def write_manifest(out_dir: Path, command: str, config_path, seed, artifacts, cfg: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "config": str(config_path) if config_path else None,
        "config_hash": hashlib.sha256(
            json.dumps(cfg, sort_keys=True).encode()
        ).hexdigest(),
        "seed": seed,
        "output_dir": str(out_dir),
        "artifacts": sorted(str(a) for a in artifacts),
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return path


def _fail(code: int, kind: str, message: str):
    click.echo(f"error: {kind}: {message}", err=True)
    sys.exit(code)


def _run(fn):
    try:
        fn()
    except ConfigError as exc:
        _fail(EXIT_CONFIG, "config", str(exc))
    except (DataError, datasets.ParseError, FileNotFoundError) as exc:
        _fail(EXIT_DATA, "data", str(exc))
    except training.DivergenceError as exc:
        _fail(EXIT_DIVERGENCE, "divergence", str(exc))
    except (InvalidInputError, ckpt_io.CheckpointError) as exc:
        _fail(EXIT_CONFIG, "config", str(exc))


@click.group()
def main():
    """Trajectory forecasting toolkit."""


common = [
    click.option("--config", "config_path", type=str, default=None),
    click.option("--dataset", type=str, default=None),
    click.option("--split", type=str, default=None),
    click.option("--checkpoint", "checkpoint_path", type=str, default=None),
    click.option("--out", "out_dir", type=str, required=True),
    click.option("--seed", type=int, default=None),
    click.option("--k", type=int, default=None),
    click.option(
        "--system", type=click.Choice(["pedestrian", "joint"]), default="pedestrian"
    ),
]


def with_options(fn):
    for opt in reversed(common):
        fn = opt(fn)
    return fn


@main.command()
@with_options
def train(config_path, dataset, split, checkpoint_path, out_dir, seed, k, system):
    """Train a model and write a checkpoint under --out."""

    def body():
        cfg = load_config(config_path)
        tc = train_config_from(cfg, seed)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if dataset is None:
            raise DataError("--dataset is required for train")
        if system == "joint":
            samples = datasets.load_joint_samples(_existing(dataset))
            ckpt = training.train_joint(samples, tc)
        else:
            train_scenes, _, _ = resolve_scenes(dataset, split, cfg)
            if not train_scenes:
                raise DataError("no training scenes after windowing")
            ckpt = training.train_adversarial(train_scenes, tc)
        ckpt_path = out / "model.ckpt"
        ckpt_io.save_checkpoint(ckpt, ckpt_path)
        history_path = out / "history.yaml"
        with open(history_path, "w") as fh:
            yaml.safe_dump(ckpt.metrics_history[-10:], fh)
        write_manifest(out, "train", config_path, tc.seed, [ckpt_path, history_path], cfg)
        click.echo(f"checkpoint written to {ckpt_path}")

    _run(body)


def _existing(path_str: str) -> Path:
    p = Path(path_str)
    if not p.exists():
        raise DataError(f"path not found: {path_str}")
    return p


def _load_ckpt(checkpoint_path):
    if checkpoint_path is None:
        raise ConfigError("--checkpoint is required")
    return ckpt_io.load_checkpoint(_existing(checkpoint_path))


@main.command("eval")
@with_options
def eval_cmd(config_path, dataset, split, checkpoint_path, out_dir, seed, k, system):
    """Evaluate a checkpoint and write a metrics report under --out."""

    def body():
        cfg = load_config(config_path)
        ckpt = _load_ckpt(checkpoint_path)
        if dataset is None:
            raise DataError("--dataset is required for eval")
        _, test_scenes, units = resolve_scenes(dataset, split, cfg)
        if not test_scenes:
            raise DataError("no evaluation scenes after windowing")
        generator, _ = training.load_pedestrian_models(ckpt, test_scenes[0].t_pred)
        k_eval = k or cfg.get("k", 1)
        report = evaluate_scenes(
            generator, test_scenes, k=k_eval, seed=seed or 0, units=units
        )
        sizes = sorted({s.n_actors for s in test_scenes})
        edges = [sizes[0], sizes[-1] + 1]
        preds = [generator.sample(s, seed=(seed or 0) + i).predicted
                 for i, s in enumerate(test_scenes)]
        report.buckets = crowd_split_report(test_scenes, preds, edges).buckets
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        metrics_path = out / "metrics.yaml"
        metrics_path.write_text(report.to_yaml())
        write_manifest(out, "eval", config_path, seed, [metrics_path], cfg)
        click.echo(report.to_yaml())

    _run(body)


@main.command()
@with_options
def predict(config_path, dataset, split, checkpoint_path, out_dir, seed, k, system):
    """Write per-scene predictions as JSON lines under --out."""

    def body():
        cfg = load_config(config_path)
        ckpt = _load_ckpt(checkpoint_path)
        if dataset is None:
            raise DataError("--dataset is required for predict")
        _, scenes, _ = resolve_scenes(dataset, split, cfg)
        generator, _ = training.load_pedestrian_models(ckpt, scenes[0].t_pred)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        pred_path = out / "predictions.jsonl"
        with open(pred_path, "w") as fh:
            for i, scene in enumerate(scenes):
                batch = generator.sample(scene, seed=(seed or 0) + i)
                obj = {
                    "scene_id": scene.scene_id,
                    "actors": [
                        {
                            "id": w.actor_id,
                            "observed": w.observed.tolist(),
                            "future": w.future.tolist(),
                        }
                        for w in scene.windows
                    ],
                    "predicted": batch.predicted.tolist(),
                }
                fh.write(json.dumps(obj) + "\n")
        write_manifest(out, "predict", config_path, seed, [pred_path], cfg)
        click.echo(f"predictions written to {pred_path}")

    _run(body)


@main.command("viz-embeddings")
@with_options
def viz_embeddings(config_path, dataset, split, checkpoint_path, out_dir, seed, k, system):
    """Project interaction embeddings to 2-D and plot nearest interacting pairs."""

    def body():
        cfg = load_config(config_path)
        ckpt = _load_ckpt(checkpoint_path)
        if dataset is None:
            raise DataError("--dataset is required")
        _, scenes, _ = resolve_scenes(dataset, split, cfg)
        generator, _ = training.load_pedestrian_models(ckpt, scenes[0].t_pred)
        embeddings, pairs = viz.collect_interaction_embeddings(generator, scenes)
        points = viz.project_2d(embeddings, seed=seed or 0)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        artifacts = []
        # nearest pair in embedding space, pre-projection
        diffs = np.linalg.norm(embeddings[:, None] - embeddings[None], axis=-1)
        np.fill_diagonal(diffs, np.inf)
        a, b = np.unravel_index(np.argmin(diffs), diffs.shape)
        scatter = out / "embedding_scatter.png"
        viz.plot_embedding_scatter(
            points, scatter, highlight=[(int(a), "red"), (int(b), "blue")]
        )
        artifacts.append(scatter)
        for label, idx, color in (("a", a, "red"), ("b", b, "blue")):
            scene_idx, i, j = pairs[idx]
            pair_path = out / f"pair_{label}.png"
            viz.plot_interaction_pair(scenes[scene_idx], i, j, pair_path, color=color)
            artifacts.append(pair_path)
        write_manifest(out, "viz-embeddings", config_path, seed, artifacts, cfg)
        click.echo(f"wrote {len(artifacts)} figures to {out}")

    _run(body)


@main.command("viz-trajectories")
@click.option("--baseline-checkpoint", type=str, default=None)
@with_options
def viz_trajectories(
    baseline_checkpoint, config_path, dataset, split, checkpoint_path, out_dir,
    seed, k, system,
):
    """Overlay ground truth, predictions, and an optional baseline per scene."""

    def body():
        cfg = load_config(config_path)
        ckpt = _load_ckpt(checkpoint_path)
        if dataset is None:
            raise DataError("--dataset is required")
        _, scenes, _ = resolve_scenes(dataset, split, cfg)
        generator, _ = training.load_pedestrian_models(ckpt, scenes[0].t_pred)
        baseline = None
        if baseline_checkpoint is not None:
            base_ckpt = ckpt_io.load_checkpoint(_existing(baseline_checkpoint))
            baseline, _ = training.load_pedestrian_models(base_ckpt, scenes[0].t_pred)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        artifacts = []
        for i, scene in enumerate(scenes):
            pred = generator.sample(scene, seed=(seed or 0) + i).predicted
            base_pred = (
                baseline.sample(scene, seed=(seed or 0) + i).predicted
                if baseline is not None
                else None
            )
            path = out / f"scene_{i:04d}.png"
            viz.plot_trajectory_overlay(scene, pred, path, base_pred)
            artifacts.append(path)
        write_manifest(out, "viz-trajectories", config_path, seed, artifacts, cfg)
        click.echo(f"wrote {len(artifacts)} figures to {out}")

    _run(body)


if __name__ == "__main__":
    main()
