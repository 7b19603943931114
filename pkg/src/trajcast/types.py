"""Core domain types shared across the package."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class ActorType(enum.Enum):
    PEDESTRIAN = "pedestrian"
    VEHICLE = "vehicle"
    OTHER = "other"


class InvalidInputError(ValueError):
    """Raised when a domain object fails validation."""


def _as_coords(arr, name: str, length: int | None = None) -> np.ndarray:
    out = np.asarray(arr, dtype=np.float64)
    if out.ndim != 2 or out.shape[1] != 2:
        raise InvalidInputError(f"{name} must be an (T, 2) array, got shape {out.shape}")
    if length is not None and out.shape[0] != length:
        raise InvalidInputError(f"{name} must have length {length}, got {out.shape[0]}")
    if not np.all(np.isfinite(out)):
        raise InvalidInputError(f"{name} contains non-finite coordinates")
    return out


@dataclass
class TrajectoryWindow:
    """One actor's observed + future coordinates over a fixed time window.

    `observed` has length t_obs + 1 (the last row is the current position),
    `future` has length t_pred. Units are meters or pixels depending on the
    source dataset; `timestep` is the spacing in seconds.
    """

    actor_id: int | str
    observed: np.ndarray
    future: np.ndarray
    timestep: float = 0.4
    actor_type: ActorType = ActorType.PEDESTRIAN
    heading: float | None = None

    def __post_init__(self):
        self.observed = _as_coords(self.observed, "observed")
        self.future = _as_coords(self.future, "future")
        if self.observed.shape[0] < 2:
            raise InvalidInputError("observed needs at least 2 positions")
        if self.heading is not None and not np.isfinite(self.heading):
            raise InvalidInputError("heading must be finite")

    @property
    def t_obs(self) -> int:
        return self.observed.shape[0] - 1

    @property
    def t_pred(self) -> int:
        return self.future.shape[0]

    @property
    def current_position(self) -> np.ndarray:
        return self.observed[-1]

    def translated(self, offset) -> "TrajectoryWindow":
        off = np.asarray(offset, dtype=np.float64)
        return TrajectoryWindow(
            actor_id=self.actor_id,
            observed=self.observed + off,
            future=self.future + off,
            timestep=self.timestep,
            actor_type=self.actor_type,
            heading=self.heading,
        )


@dataclass
class SceneSample:
    """All co-visible trajectory windows for one time window."""

    windows: list[TrajectoryWindow]
    units: str = "meters"
    scene_id: int | str | None = None

    def __post_init__(self):
        if not self.windows:
            raise InvalidInputError("a scene needs at least one actor")
        t_obs = {w.t_obs for w in self.windows}
        t_pred = {w.t_pred for w in self.windows}
        if len(t_obs) != 1 or len(t_pred) != 1:
            raise InvalidInputError("all windows in a scene must share t_obs and t_pred")

    @property
    def n_actors(self) -> int:
        return len(self.windows)

    @property
    def t_obs(self) -> int:
        return self.windows[0].t_obs

    @property
    def t_pred(self) -> int:
        return self.windows[0].t_pred

    def observed_array(self) -> np.ndarray:
        """(N, t_obs+1, 2) stack of observed coordinates."""
        return np.stack([w.observed for w in self.windows])

    def future_array(self) -> np.ndarray:
        """(N, t_pred, 2) stack of ground-truth future coordinates."""
        return np.stack([w.future for w in self.windows])

    def translated(self, offset) -> "SceneSample":
        return SceneSample(
            windows=[w.translated(offset) for w in self.windows],
            units=self.units,
            scene_id=self.scene_id,
        )


@dataclass
class SdvPose:
    x: float
    y: float
    heading: float

    def __post_init__(self):
        if not all(np.isfinite([self.x, self.y, self.heading])):
            raise InvalidInputError("SDV pose must be finite")


@dataclass
class JointSceneSample:
    """Scene sample for the joint pedestrian/vehicle setting.

    The global frame is SDV-centered: the SDV pose position is the origin.
    Every actor window carries a heading at the current timestamp.
    """

    actors: list[TrajectoryWindow]
    sdv_pose: SdvPose = field(default_factory=lambda: SdvPose(0.0, 0.0, 0.0))
    drivable_area: list[np.ndarray] = field(default_factory=list)
    scene_id: int | str | None = None

    def __post_init__(self):
        if not self.actors:
            raise InvalidInputError("a joint scene needs at least one actor")
        for w in self.actors:
            if w.heading is None:
                raise InvalidInputError(f"actor {w.actor_id} is missing a heading")
        self.drivable_area = [_as_coords(p, "drivable polygon") for p in self.drivable_area]

    @property
    def scene(self) -> SceneSample:
        return SceneSample(windows=self.actors, units="meters", scene_id=self.scene_id)


@dataclass
class PredictionBatch:
    """Predicted trajectories plus their individual and interaction parts.

    Invariant: predicted[t] == predicted[t-1] + individual[t] + interaction[t]
    with predicted[-1] taken as the actor's current position.
    """

    predicted: np.ndarray            # (N, t_pred, 2)
    individual_component: np.ndarray  # (N, t_pred, 2)
    interaction_component: np.ndarray  # (N, t_pred, 2)
    noise_seed: int | None = None

    @property
    def n_actors(self) -> int:
        return self.predicted.shape[0]

    @property
    def t_pred(self) -> int:
        return self.predicted.shape[1]
