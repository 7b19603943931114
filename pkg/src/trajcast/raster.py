"""Bird's-eye-view scene rasterization.

Renders a joint scene sample into an RGB image: drivable area in white on a
black background, then actor footprints layered on top (vehicles yellow, SDV
red, pedestrians green, other actors black), with each actor's history drawn
oldest-first at geometrically decaying brightness so motion direction is
visible in a single frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

from .types import ActorType, InvalidInputError, JointSceneSample, TrajectoryWindow

PALETTE = {
    "background": (0, 0, 0),
    "drivable": (255, 255, 255),
    "vehicle": (255, 255, 0),
    "sdv": (255, 0, 0),
    "pedestrian": (0, 255, 0),
    "other": (0, 0, 0),
}

VEHICLE_LENGTH_M = 4.5
VEHICLE_WIDTH_M = 2.0
PEDESTRIAN_RADIUS_M = 0.4


@dataclass(frozen=True)
class RasterSpec:
    size_px: tuple[int, int] = (500, 500)  # (H, W)
    resolution: float = 0.2                # meters per pixel
    history_steps: int = 3
    fade_factor: float = 0.8

    def __post_init__(self):
        if not 0.0 < self.fade_factor < 1.0:
            raise InvalidInputError("fade_factor must lie in (0, 1)")
        if self.resolution <= 0:
            raise InvalidInputError("resolution must be positive")

    @property
    def extent_m(self) -> tuple[float, float]:
        return (self.size_px[0] * self.resolution, self.size_px[1] * self.resolution)


@dataclass
class RasterImage:
    pixels: np.ndarray          # (H, W, 3) uint8, RGB
    sdv_pose: tuple[float, float, float]
    spec: RasterSpec

    def to_tensor(self) -> np.ndarray:
        """(3, H, W) float32 in [0, 1], channel-first for the scene encoder."""
        return (self.pixels.astype(np.float32) / 255.0).transpose(2, 0, 1)


def _world_to_pixel(points: np.ndarray, sdv_heading: float, spec: RasterSpec) -> np.ndarray:
    """Map SDV-centered global coordinates to (col, row) pixel coordinates.

    The SDV heading points up (toward row 0); left of the SDV is left in the
    image. Returns float pixel coordinates; callers round for drawing.
    """
    h, w = spec.size_px
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    c, s = np.cos(-sdv_heading), np.sin(-sdv_heading)
    forward = pts[:, 0] * c - pts[:, 1] * s
    left = pts[:, 0] * s + pts[:, 1] * c
    rows = h / 2.0 - forward / spec.resolution
    cols = w / 2.0 - left / spec.resolution
    return np.stack([cols, rows], axis=1)


def _faded(color: tuple[int, int, int], age: int, fade: float) -> tuple[int, int, int]:
    scale = fade ** age
    return tuple(int(round(ch * scale)) for ch in color)


def _vehicle_corners(center: np.ndarray, heading: float) -> np.ndarray:
    half_l, half_w = VEHICLE_LENGTH_M / 2.0, VEHICLE_WIDTH_M / 2.0
    local = np.array(
        [[half_l, half_w], [half_l, -half_w], [-half_l, -half_w], [-half_l, half_w]]
    )
    c, s = np.cos(heading), np.sin(heading)
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + center


def _draw_polygon(img: np.ndarray, pixel_pts: np.ndarray, color) -> None:
    cv2.fillPoly(img, [np.round(pixel_pts).astype(np.int32)], color)


def _draw_actor_frame(
    img: np.ndarray,
    window: TrajectoryWindow,
    position: np.ndarray,
    color: tuple[int, int, int],
    sdv_heading: float,
    spec: RasterSpec,
) -> None:
    if window.actor_type is ActorType.VEHICLE:
        corners = _vehicle_corners(position, window.heading or 0.0)
        _draw_polygon(img, _world_to_pixel(corners, sdv_heading, spec), color)
    else:
        center = _world_to_pixel(position, sdv_heading, spec)[0]
        radius = max(1, int(round(PEDESTRIAN_RADIUS_M / spec.resolution)))
        cv2.circle(img, tuple(np.round(center).astype(int)), radius, color, -1)


def rasterize(sample: JointSceneSample, spec: RasterSpec | None = None) -> RasterImage:
    """Render one SDV-centered scene; deterministic and bit-exact per input."""
    spec = spec or RasterSpec()
    h, w = spec.size_px
    img = np.zeros((h, w, 3), dtype=np.uint8)
    img[:] = PALETTE["background"]
    sdv_heading = sample.sdv_pose.heading

    for polygon in sample.drivable_area:
        _draw_polygon(img, _world_to_pixel(polygon, sdv_heading, spec), PALETTE["drivable"])

    def history(window: TrajectoryWindow) -> list[tuple[int, np.ndarray]]:
        # (age, position) pairs, oldest first, so newer frames paint on top
        steps = min(spec.history_steps, window.t_obs)
        return [(age, window.observed[-1 - age]) for age in range(steps, -1, -1)]

    def paint(windows: list[TrajectoryWindow], color: tuple[int, int, int]) -> None:
        for window in windows:
            for age, pos in history(window):
                _draw_actor_frame(
                    img, window, pos, _faded(color, age, spec.fade_factor),
                    sdv_heading, spec,
                )

    actors = sample.actors
    paint([a for a in actors if a.actor_type is ActorType.VEHICLE], PALETTE["vehicle"])
    # the SDV itself: a vehicle footprint at the origin with the SDV heading
    sdv_window = TrajectoryWindow(
        actor_id="sdv",
        observed=np.zeros((2, 2)),
        future=np.zeros((1, 2)),
        actor_type=ActorType.VEHICLE,
        heading=sdv_heading,
    )
    _draw_actor_frame(img, sdv_window, np.zeros(2), PALETTE["sdv"], sdv_heading, spec)
    paint([a for a in actors if a.actor_type is ActorType.PEDESTRIAN], PALETTE["pedestrian"])
    paint([a for a in actors if a.actor_type is ActorType.OTHER], PALETTE["other"])

    return RasterImage(
        pixels=img,
        sdv_pose=(sample.sdv_pose.x, sample.sdv_pose.y, sample.sdv_pose.heading),
        spec=spec,
    )


def write_ppm(image: RasterImage, path) -> None:
    """Lossless portable-pixmap export for golden-image comparison."""
    h, w, _ = image.pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(image.pixels.tobytes())


def write_png(image: RasterImage, path) -> None:
    cv2.imwrite(str(path), cv2.cvtColor(image.pixels, cv2.COLOR_RGB2BGR))
