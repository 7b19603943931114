"""Trajectory file ingestion, windowing, splits, and synthetic scenes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .types import (
    ActorType,
    InvalidInputError,
    JointSceneSample,
    SceneSample,
    SdvPose,
    TrajectoryWindow,
)


class ParseError(ValueError):
    """Raised on malformed trajectory files; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class RawRecord:
    frame_id: int
    actor_id: int
    x: float
    y: float


@dataclass
class DatasetSplit:
    train: list[SceneSample]
    test: list[SceneSample]
    val: list[SceneSample] = field(default_factory=list)
    held_out: str | None = None
    t_obs: int = 8
    t_pred: int = 12
    timestep: float = 0.4
    units: str = "meters"


def parse_trajectory_file(
    path, units: str = "meters", columns: str = "frame actor x y"
) -> list[RawRecord]:
    """Parse whitespace/tab separated trajectory rows.

    Default column order is `frame actor x y`; public dataset variants
    disagree, so any permutation of those four names is accepted.
    """
    order = columns.split()
    if sorted(order) != ["actor", "frame", "x", "y"]:
        raise InvalidInputError(f"bad column spec {columns!r}")
    idx = {name: order.index(name) for name in order}
    records: list[RawRecord] = []
    seen: set[tuple[int, int]] = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ParseError(f"expected 4 fields, got {len(parts)}", lineno)
            try:
                frame = int(float(parts[idx["frame"]]))
                actor = int(float(parts[idx["actor"]]))
                x = float(parts[idx["x"]])
                y = float(parts[idx["y"]])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if not (np.isfinite(x) and np.isfinite(y)):
                raise ParseError("non-finite coordinate", lineno)
            key = (frame, actor)
            if key in seen:
                raise ParseError(f"duplicate (frame, actor) pair {key}", lineno)
            seen.add(key)
            records.append(RawRecord(frame, actor, x, y))
    records.sort(key=lambda r: (r.frame_id, r.actor_id))
    return records


def window_scenes(
    records: list[RawRecord],
    t_obs: int = 8,
    t_pred: int = 12,
    timestep: float = 0.4,
    stride: int = 1,
    units: str = "meters",
) -> list[SceneSample]:
    """Slide a window of t_obs+1+t_pred frames over the recorded frames.

    A scene contains exactly the actors present in every frame of the window;
    windows with no fully-observed actor are dropped.
    """
    if not records:
        return []
    window_len = t_obs + 1 + t_pred
    frames = sorted({r.frame_id for r in records})
    by_frame: dict[int, dict[int, RawRecord]] = {}
    for r in records:
        by_frame.setdefault(r.frame_id, {})[r.actor_id] = r

    scenes: list[SceneSample] = []
    for start in range(0, len(frames) - window_len + 1, stride):
        chunk = frames[start : start + window_len]
        present = set(by_frame[chunk[0]])
        for f in chunk[1:]:
            present &= set(by_frame[f])
        if not present:
            continue
        windows = []
        for actor in sorted(present):
            coords = np.array(
                [[by_frame[f][actor].x, by_frame[f][actor].y] for f in chunk]
            )
            windows.append(
                TrajectoryWindow(
                    actor_id=actor,
                    observed=coords[: t_obs + 1],
                    future=coords[t_obs + 1 :],
                    timestep=timestep,
                )
            )
        scenes.append(SceneSample(windows=windows, units=units, scene_id=start))
    return scenes


def leave_one_out(sets: dict[str, list[SceneSample]], **protocol) -> list[DatasetSplit]:
    """One split per named set: train on the union of the others, test on it."""
    if len(sets) < 2:
        raise InvalidInputError("leave-one-out needs at least 2 named sets")
    splits = []
    for held_out in sets:
        train = [s for name, scenes in sets.items() if name != held_out for s in scenes]
        splits.append(
            DatasetSplit(train=train, test=list(sets[held_out]), held_out=held_out, **protocol)
        )
    return splits


def synthesize_interacting_scenes(
    n_scenes: int,
    actors_per_scene: int = 2,
    rule: str = "leader_follower",
    seed: int = 0,
    t_obs: int = 8,
    t_pred: int = 8,
    delay: int | None = None,
) -> list[SceneSample]:
    """Deterministic synthetic scenes where futures provably depend on neighbors.

    leader_follower: actor 0 performs a seeded random walk with turns; every
    other actor replays the leader's trajectory with a per-actor delay, so each
    follower's future is a function of the leader's observed past.
    parallel_group: all actors share one velocity, at constant offsets.
    head_on_avoidance: two rows approach, swerve laterally, and continue.
    """
    rng = np.random.default_rng(seed)
    if rule == "leader_follower" and delay is None:
        delay = t_pred
    scenes = []
    for idx in range(n_scenes):
        if rule == "leader_follower":
            windows = _leader_follower(rng, actors_per_scene, t_obs, t_pred, delay)
        elif rule == "parallel_group":
            windows = _parallel_group(rng, actors_per_scene, t_obs, t_pred)
        elif rule == "head_on_avoidance":
            windows = _head_on(rng, actors_per_scene, t_obs, t_pred)
        else:
            raise InvalidInputError(f"unknown rule {rule!r}")
        scenes.append(SceneSample(windows=windows, scene_id=idx))
    return scenes


def _turning_walk(rng, length: int, speed: float = 1.0) -> np.ndarray:
    """Random walk with frequent direction changes; hard to extrapolate."""
    angle = rng.uniform(0, 2 * np.pi)
    pos = rng.uniform(-5, 5, size=2)
    points = [pos.copy()]
    for _ in range(length - 1):
        angle += rng.uniform(-1.2, 1.2)
        pos = pos + speed * np.array([np.cos(angle), np.sin(angle)])
        points.append(pos.copy())
    return np.array(points)


def _leader_follower(rng, n_actors, t_obs, t_pred, delay):
    total = t_obs + 1 + t_pred
    base = _turning_walk(rng, total + delay * (n_actors - 1))
    windows = []
    # follower k trails the leader by k * delay steps; with delay >= t_pred the
    # follower's whole future lies inside the leader's observed window
    for k in range(n_actors):
        track = base[delay * (n_actors - 1 - k) :][:total]
        windows.append(
            TrajectoryWindow(
                actor_id=k,
                observed=track[: t_obs + 1],
                future=track[t_obs + 1 :],
                timestep=0.4,
            )
        )
    return windows


def _parallel_group(rng, n_actors, t_obs, t_pred):
    total = t_obs + 1 + t_pred
    velocity = rng.uniform(-1, 1, size=2)
    base = rng.uniform(-5, 5, size=2)
    times = np.arange(total)[:, None]
    windows = []
    for k in range(n_actors):
        offset = base + rng.uniform(-3, 3, size=2) if k else base
        track = offset + times * velocity
        windows.append(
            TrajectoryWindow(
                actor_id=k, observed=track[: t_obs + 1], future=track[t_obs + 1 :],
                timestep=0.4,
            )
        )
    return windows


def _head_on(rng, n_actors, t_obs, t_pred):
    total = t_obs + 1 + t_pred
    times = np.arange(total)
    mid = total // 2
    swerve = np.where(np.abs(times - mid) < 3, 1.0, 0.0)
    windows = []
    for k in range(n_actors):
        direction = 1.0 if k % 2 == 0 else -1.0
        start = -direction * total / 2 + rng.uniform(-1, 1)
        y0 = rng.uniform(-2, 2)
        xs = start + direction * times
        ys = y0 + direction * swerve
        track = np.stack([xs, ys], axis=1)
        windows.append(
            TrajectoryWindow(
                actor_id=k, observed=track[: t_obs + 1], future=track[t_obs + 1 :],
                timestep=0.4,
            )
        )
    return windows


# --- joint-sample JSON-lines format -----------------------------------------

def load_joint_samples(path) -> list[JointSceneSample]:
    """Read JointSceneSamples from JSON lines, one sample per line."""
    samples = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(exc), lineno) from None
            samples.append(_joint_from_dict(obj, lineno))
    return samples


def save_joint_samples(samples: list[JointSceneSample], path) -> None:
    with open(path, "w") as fh:
        for sample in samples:
            fh.write(json.dumps(joint_to_dict(sample)) + "\n")


def _joint_from_dict(obj: dict, lineno: int | None = None) -> JointSceneSample:
    try:
        actors = [
            TrajectoryWindow(
                actor_id=a["id"],
                actor_type=ActorType(a["type"]),
                heading=float(a["heading"]),
                observed=np.array(a["observed"], dtype=float),
                future=np.array(a["future"], dtype=float),
                timestep=0.1,
            )
            for a in obj["actors"]
        ]
        sdv = obj.get("sdv", {"x": 0.0, "y": 0.0, "heading": 0.0})
        return JointSceneSample(
            actors=actors,
            sdv_pose=SdvPose(float(sdv["x"]), float(sdv["y"]), float(sdv["heading"])),
            drivable_area=[np.array(p, dtype=float) for p in obj.get("drivable", [])],
            scene_id=obj.get("scene_id"),
        )
    except (KeyError, ValueError, InvalidInputError) as exc:
        raise ParseError(f"bad joint sample: {exc}", lineno) from None


def joint_to_dict(sample: JointSceneSample, predictions: np.ndarray | None = None) -> dict:
    obj = {
        "actors": [
            {
                "id": w.actor_id,
                "type": w.actor_type.value,
                "heading": w.heading,
                "observed": w.observed.tolist(),
                "future": w.future.tolist(),
            }
            for w in sample.actors
        ],
        "sdv": {
            "x": sample.sdv_pose.x,
            "y": sample.sdv_pose.y,
            "heading": sample.sdv_pose.heading,
        },
        "drivable": [p.tolist() for p in sample.drivable_area],
    }
    if sample.scene_id is not None:
        obj["scene_id"] = sample.scene_id
    if predictions is not None:
        obj["predicted"] = np.asarray(predictions).tolist()
    return obj


def load_manifest(path) -> dict[str, list[str]]:
    """Dataset manifest: YAML mapping of set name to a list of file paths."""
    import yaml

    with open(path) as fh:
        obj = yaml.safe_load(fh)
    if not isinstance(obj, dict):
        raise InvalidInputError("manifest must be a mapping of set name to file list")
    return {str(k): [str(p) for p in v] for k, v in obj.items()}
