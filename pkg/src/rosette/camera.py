"""Camera and light sampling for the randomized top-down view.

The camera is jittered around a nominal overhead pose but constrained so
the viewing direction stays within 15 degrees of straight down and the
whole plant projects inside the frame (jitter is clamped, never
rejected, so sampling cannot fail).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import GenerationConfig
from .rng import RandomSource, sample_uniform

MAX_TILT = math.radians(15.0)
_FIT_MARGIN = 0.03           # keep projections at least this fraction inside the frame
_NEAR = 1e-6


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


@dataclass
class Camera:
    position: np.ndarray
    look_at: np.ndarray
    up: np.ndarray
    vertical_fov: float
    width: int
    height: int

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        forward = _normalize(self.look_at - self.position)
        right = _normalize(np.cross(forward, self.up))
        true_up = np.cross(right, forward)
        return right, true_up, forward

    def project(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Project world points to pixel coordinates.

        Returns (px, py, depth): px/py in pixels with (0,0) the top-left
        image corner, depth the positive distance along the view axis.
        Points at or behind the camera plane get depth <= 0 and
        unreliable pixel coordinates; callers must guard on depth.
        """
        right, true_up, forward = self.basis()
        d = np.atleast_2d(points) - self.position
        x = d @ right
        y = d @ true_up
        depth = d @ forward
        safe = np.where(np.abs(depth) < _NEAR, _NEAR, depth)
        tan_half = math.tan(self.vertical_fov / 2.0)
        aspect = self.width / self.height
        ndc_x = x / (safe * tan_half * aspect)
        ndc_y = y / (safe * tan_half)
        px = (ndc_x + 1.0) * 0.5 * self.width
        py = (1.0 - ndc_y) * 0.5 * self.height
        return px, py, depth


@dataclass
class Light:
    """The scene's single light source."""

    position: np.ndarray
    intensity: np.ndarray        # RGB, >= 0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.intensity = np.asarray(self.intensity, dtype=np.float64)
        if (self.intensity < 0).any():
            raise ValueError("light intensity must be >= 0")


def _bbox_corners(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    return np.array([[x, y, z] for x in (lo[0], hi[0])
                     for y in (lo[1], hi[1])
                     for z in (lo[2], hi[2])])


def _fits(cam: Camera, corners: np.ndarray) -> bool:
    px, py, depth = cam.project(corners)
    mx = _FIT_MARGIN * cam.width
    my = _FIT_MARGIN * cam.height
    return bool((depth > _NEAR).all()
                and (px >= mx).all() and (px <= cam.width - mx).all()
                and (py >= my).all() and (py <= cam.height - my).all())


def sample_camera(src: RandomSource, cfg: GenerationConfig,
                  plant_bbox: tuple[np.ndarray, np.ndarray]) -> Camera:
    """Jittered overhead camera; jitter is clamped to keep the constraints.

    With camera_jitter = 0 this is an exact nadir view centered on the
    plant. Draw order: offset azimuth, offset radius, distance jitter,
    look-at jitter (x, y) -- consumed even at zero jitter so streams stay
    aligned across configs.
    """
    lo, hi = (np.asarray(b, dtype=np.float64) for b in plant_bbox)
    center = (lo + hi) / 2.0
    radius = max(float(np.linalg.norm(hi - lo)) / 2.0, 1e-3)

    aspect = cfg.image_width / cfg.image_height
    fov_h = 2.0 * math.atan(math.tan(cfg.camera_fov / 2.0) * aspect)
    fov_min = min(cfg.camera_fov, fov_h)
    distance = radius / math.tan(fov_min / 2.0) * 1.25

    offset_azimuth = sample_uniform(src, 0.0, 2.0 * math.pi)
    offset_frac = src.random()
    distance_jitter = sample_uniform(src, -0.15, 0.15) * cfg.camera_jitter
    look_dx = sample_uniform(src, -1.0, 1.0) * cfg.camera_jitter * 0.1 * radius
    look_dy = sample_uniform(src, -1.0, 1.0) * cfg.camera_jitter * 0.1 * radius

    distance *= 1.0 + distance_jitter
    # lateral offset bounded by the tilt budget at this distance
    max_lateral = math.tan(MAX_TILT) * distance * cfg.camera_jitter
    lateral = offset_frac * max_lateral
    offset = np.array([lateral * math.cos(offset_azimuth),
                       lateral * math.sin(offset_azimuth), 0.0])
    look_at = center + np.array([look_dx, look_dy, 0.0])

    corners = _bbox_corners(lo, hi)
    for _ in range(64):
        position = center + offset + np.array([0.0, 0.0, distance])
        direction = _normalize(look_at - position)
        tilt = math.acos(min(1.0, max(-1.0, -direction[2])))
        if tilt > MAX_TILT:
            offset *= 0.5
            continue
        cam = Camera(position=position, look_at=look_at, up=np.array([0.0, 1.0, 0.0]),
                     vertical_fov=cfg.camera_fov,
                     width=cfg.image_width, height=cfg.image_height)
        if _fits(cam, corners):
            return cam
        distance *= 1.12
    raise RuntimeError("camera fitting failed to converge (degenerate scene bounds?)")


def sample_light(src: RandomSource, cfg: GenerationConfig,
                 plant_bbox: tuple[np.ndarray, np.ndarray]) -> Light:
    """Single light, uniform over a cone about the vertical, fixed distance."""
    lo, hi = (np.asarray(b, dtype=np.float64) for b in plant_bbox)
    center = (lo + hi) / 2.0
    radius = max(float(np.linalg.norm(hi - lo)) / 2.0, 1e-3)
    cos_min = math.cos(cfg.light_position_range)
    cos_theta = sample_uniform(src, cos_min, 1.0)
    azimuth = sample_uniform(src, 0.0, 2.0 * math.pi)
    sin_theta = math.sqrt(max(0.0, 1.0 - cos_theta * cos_theta))
    direction = np.array([sin_theta * math.cos(azimuth),
                          sin_theta * math.sin(azimuth),
                          cos_theta])
    position = center + direction * (cfg.light_distance_factor * radius)
    return Light(position=position, intensity=np.ones(3))
