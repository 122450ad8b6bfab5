"""Fixed pinhole camera (OpenCV convention: x right, y down, z forward)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..config import CameraConfig


@dataclass(frozen=True)
class Camera:
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray  # world -> camera, rows are the camera axes in world frame
    position: np.ndarray  # camera center in world frame

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")

    @classmethod
    def look_at(cls, eye, target=(0.0, 0.0, 0.0), up=(0.0, 0.0, 1.0), *, width=160, height=120,
                fx=100.0, fy=100.0, cx=None, cy=None) -> "Camera":
        eye = np.asarray(eye, dtype=float)
        f = np.asarray(target, dtype=float) - eye
        f /= np.linalg.norm(f)
        r = np.cross(f, np.asarray(up, dtype=float))
        r /= np.linalg.norm(r)
        d = np.cross(f, r)
        rot = np.vstack([r, d, f])
        return cls(int(width), int(height), float(fx), float(fy),
                   float(width / 2 if cx is None else cx), float(height / 2 if cy is None else cy),
                   rot, eye)

    @classmethod
    def from_config(cls, cfg: CameraConfig) -> "Camera":
        el, az = math.radians(cfg.elevation_deg), math.radians(cfg.azimuth_deg)
        eye = cfg.distance * np.array([math.cos(el) * math.cos(az), math.cos(el) * math.sin(az),
                                       math.sin(el)])
        return cls.look_at(eye, width=cfg.width, height=cfg.height, fx=cfg.fx, fy=cfg.fy,
                           cx=cfg.cx, cy=cfg.cy)

    def to_camera(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.position) @ self.rotation.T

    def project(self, points) -> np.ndarray:
        """Pixel coordinates (u, v) of world points; pixel (i, j) has its center at (i, j)."""
        pc = self.to_camera(points)
        return np.stack([self.fx * pc[..., 0] / pc[..., 2] + self.cx,
                         self.fy * pc[..., 1] / pc[..., 2] + self.cy], axis=-1)

    def ray_directions(self) -> np.ndarray:
        """Unit world-frame ray directions, shape (height, width, 3)."""
        u, v = np.meshgrid(np.arange(self.width, dtype=float), np.arange(self.height, dtype=float))
        d = np.stack([(u - self.cx) / self.fx, (v - self.cy) / self.fy, np.ones_like(u)], axis=-1)
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        return d @ self.rotation

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height, "fx": self.fx, "fy": self.fy,
                "cx": self.cx, "cy": self.cy, "rotation": self.rotation.tolist(),
                "position": self.position.tolist()}
