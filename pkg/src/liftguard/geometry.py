"""Coordinate frames and the pinhole projection chain.

Four frames are used throughout: pixel (u, v), camera, LiDAR and world.
A calibrated rig is described by the camera intrinsics plus two rigid
transforms: LiDAR-to-camera and world-to-LiDAR.  All public operations
take and return typed frame points so a caller can never silently feed
a LiDAR point into a world-frame computation.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .errors import NonOrthonormalRotation, NonPositiveDepth

ROTATION_TOL = 1e-6


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics: focal lengths and principal point, in pixels."""

    f_x: float
    f_y: float
    c_x: float
    c_y: float

    def __post_init__(self):
        if self.f_x <= 0 or self.f_y <= 0:
            raise ValueError("focal lengths must be positive")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.f_x, 0.0, self.c_x], [0.0, self.f_y, self.c_y], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True)
class RigidTransform:
    """SE(3) transform: p' = R @ p + t.  Rotation is validated on construction."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        if np.abs(r.T @ r - np.eye(3)).max() > ROTATION_TOL:
            raise NonOrthonormalRotation("rotation is not orthonormal within 1e-6")
        if abs(np.linalg.det(r) - 1.0) > ROTATION_TOL:
            raise NonOrthonormalRotation("rotation determinant differs from 1")

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m) -> "RigidTransform":
        m = np.asarray(m, dtype=float).reshape(4, 4)
        return cls(m[:3, :3], m[:3, 3])

    @property
    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def apply(self, p) -> np.ndarray:
        """Apply the transform to a 3-vector (or an N x 3 array of them)."""
        p = np.asarray(p, dtype=float)
        return p @ self.rotation.T + self.translation

    def inverse(self) -> "RigidTransform":
        rot = self.rotation.T
        return RigidTransform(rot, -rot @ self.translation)


def apply_transform(t: RigidTransform, p) -> np.ndarray:
    return t.apply(p)


def invert_rigid(t: RigidTransform) -> RigidTransform:
    return t.inverse()


@dataclass(frozen=True)
class PixelPoint:
    """Pixel-frame point, optionally carrying a camera-frame depth in meters."""

    u: float
    v: float
    depth: float | None = None

    def __post_init__(self):
        if self.depth is not None and self.depth <= 0:
            raise NonPositiveDepth(f"pixel depth must be positive, got {self.depth}")


@dataclass(frozen=True)
class CameraPoint:
    x: float
    y: float
    z: float

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class LidarPoint:
    x: float
    y: float
    z: float

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class WorldPoint:
    x: float
    y: float
    z: float

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class CalibrationBundle:
    """Everything needed to move between the four frames of one rig."""

    intrinsics: Intrinsics
    lidar_to_camera: RigidTransform
    world_to_lidar: RigidTransform
    image_width: int
    image_height: int

    def __post_init__(self):
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValueError("image dimensions must be positive")


def camera_to_pixel(p: CameraPoint, k: Intrinsics) -> PixelPoint:
    """Project a camera-frame point onto the image plane; keeps the depth."""
    if p.z <= 0:
        raise NonPositiveDepth(f"camera point z must be positive, got {p.z}")
    u = k.f_x * p.x / p.z + k.c_x
    v = k.f_y * p.y / p.z + k.c_y
    return PixelPoint(u, v, depth=p.z)


def pixel_to_camera(p: PixelPoint, k: Intrinsics) -> CameraPoint:
    """Back-project a pixel with known depth into the camera frame."""
    if p.depth is None or p.depth <= 0:
        raise NonPositiveDepth("pixel point needs a positive depth to back-project")
    x = p.depth * (p.u - k.c_x) / k.f_x
    y = p.depth * (p.v - k.c_y) / k.f_y
    return CameraPoint(x, y, p.depth)


def world_to_camera(p: WorldPoint, calib: CalibrationBundle) -> CameraPoint:
    """Forward chain: world -> LiDAR -> camera."""
    pl = calib.world_to_lidar.apply(p.vec)
    pc = calib.lidar_to_camera.apply(pl)
    return CameraPoint(*pc)


def world_to_pixel(p: WorldPoint, calib: CalibrationBundle) -> PixelPoint:
    """Forward chain: world -> LiDAR -> camera -> pixel (with depth)."""
    return camera_to_pixel(world_to_camera(p, calib), calib.intrinsics)


def pixel_depth_to_world(p: PixelPoint, calib: CalibrationBundle) -> WorldPoint:
    """Back-project a pixel plus depth all the way to the world frame."""
    pc = pixel_to_camera(p, calib.intrinsics)
    pl = calib.lidar_to_camera.inverse().apply(pc.vec)
    pw = calib.world_to_lidar.inverse().apply(pl)
    return WorldPoint(*pw)


def load_calibration(path) -> CalibrationBundle:
    """Load a calibration bundle from its YAML file."""
    with open(path) as f:
        doc = yaml.safe_load(f)
    intr = doc["intrinsics"]
    return CalibrationBundle(
        intrinsics=Intrinsics(
            f_x=float(intr["f_x"]),
            f_y=float(intr["f_y"]),
            c_x=float(intr["c_x"]),
            c_y=float(intr["c_y"]),
        ),
        lidar_to_camera=RigidTransform.from_matrix(doc["lidar_to_camera"]),
        world_to_lidar=RigidTransform.from_matrix(doc["world_to_lidar"]),
        image_width=int(doc["image_size"]["width"]),
        image_height=int(doc["image_size"]["height"]),
    )


def save_calibration(calib: CalibrationBundle, path) -> None:
    doc = {
        "intrinsics": {
            "f_x": float(calib.intrinsics.f_x),
            "f_y": float(calib.intrinsics.f_y),
            "c_x": float(calib.intrinsics.c_x),
            "c_y": float(calib.intrinsics.c_y),
        },
        "lidar_to_camera": [[float(x) for x in row] for row in calib.lidar_to_camera.matrix],
        "world_to_lidar": [[float(x) for x in row] for row in calib.world_to_lidar.matrix],
        "image_size": {"width": calib.image_width, "height": calib.image_height},
    }
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=True))
