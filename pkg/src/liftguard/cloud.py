"""Point-cloud ingestion, cleanup and depth-image rendering.

Clouds live in the LiDAR frame.  A depth image stores, per pixel, the
camera-frame z of the nearest point that projected there (NaN elsewhere).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import EmptyCloud
from .geometry import CalibrationBundle


@dataclass(frozen=True)
class PointCloud:
    """3D samples in the LiDAR frame plus the stream timestamp in seconds."""

    points: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "points", pts)
        if pts.size and not np.isfinite(pts).all():
            raise ValueError("cloud contains non-finite coordinates")
        if self.timestamp < 0:
            raise ValueError("timestamp must be nonnegative")

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class DepthImage:
    """Per-pixel nearest camera-frame depth; NaN marks unpopulated pixels."""

    depth: np.ndarray
    timestamp: float = 0.0

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    def populated_count(self) -> int:
        return int(np.isfinite(self.depth).sum())


def denoise(cloud: PointCloud, k_neighbors: int = 16, std_ratio: float = 2.0) -> PointCloud:
    """Statistical outlier removal.

    A point is dropped when its mean distance to its k nearest neighbors
    exceeds the global mean of that statistic by std_ratio standard
    deviations.  Clouds too small to form the neighbor statistic pass
    through unchanged.
    """
    if len(cloud) == 0:
        raise EmptyCloud("cannot denoise an empty cloud")
    if k_neighbors < 1 or std_ratio <= 0:
        raise ValueError("k_neighbors must be >= 1 and std_ratio > 0")
    if len(cloud) <= k_neighbors:
        return cloud
    tree = cKDTree(cloud.points)
    # k+1 because each point is its own nearest neighbor at distance 0.
    dists, _ = tree.query(cloud.points, k=k_neighbors + 1)
    mean_d = dists[:, 1:].mean(axis=1)
    # Nanometer slack keeps perfectly uniform clouds (std ~ float dust) stable.
    fence = mean_d.mean() + std_ratio * mean_d.std() + 1e-9
    return PointCloud(cloud.points[mean_d <= fence], cloud.timestamp)


def voxel_downsample(cloud: PointCloud, voxel: float) -> PointCloud:
    """Collapse each occupied voxel to the centroid of its member points."""
    if len(cloud) == 0:
        raise EmptyCloud("cannot downsample an empty cloud")
    if voxel <= 0:
        raise ValueError("voxel size must be positive")
    idx = np.floor(cloud.points / voxel).astype(np.int64)
    idx -= idx.min(axis=0)
    dims = idx.max(axis=0).astype(np.int64) + 1
    keys = (idx[:, 0] * dims[1] + idx[:, 1]) * dims[2] + idx[:, 2]
    centroids = kernels.voxel_centroids(keys, np.ascontiguousarray(cloud.points))
    return PointCloud(centroids, cloud.timestamp)


def render_depth_image(cloud: PointCloud, calib: CalibrationBundle) -> DepthImage:
    """Project the cloud through the calibration and z-buffer it into pixels.

    Points behind the camera or outside the image are ignored; colliding
    pixels keep the smallest depth.  Sub-pixel positions truncate toward
    zero.
    """
    w, h = calib.image_width, calib.image_height
    if len(cloud) == 0:
        return DepthImage(np.full((h, w), np.nan), cloud.timestamp)
    pc = cloud.points @ calib.lidar_to_camera.rotation.T + calib.lidar_to_camera.translation
    front = pc[:, 2] > 0
    pc = pc[front]
    k = calib.intrinsics
    u = k.f_x * pc[:, 0] / pc[:, 2] + k.c_x
    v = k.f_y * pc[:, 1] / pc[:, 2] + k.c_y
    iu = np.trunc(u).astype(np.int64)
    iv = np.trunc(v).astype(np.int64)
    inside = (u >= 0) & (v >= 0) & (iu < w) & (iv < h)
    buf = kernels.zbuffer_min(
        iu[inside], iv[inside], np.ascontiguousarray(pc[inside, 2]), w, h
    )
    buf[np.isinf(buf)] = np.nan
    return DepthImage(buf, cloud.timestamp)


# --- file formats -----------------------------------------------------------


def load_cloud(path, timestamp: float = 0.0) -> PointCloud:
    """Read a cloud from .ply (ascii or binary little-endian) or .csv."""
    path = Path(path)
    if path.suffix.lower() == ".ply":
        return _load_ply(path, timestamp)
    pts = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    if pts.size == 0:
        pts = np.empty((0, 3))
    return PointCloud(pts[:, :3], timestamp)


def save_cloud(cloud: PointCloud, path, binary: bool = True) -> None:
    path = Path(path)
    if path.suffix.lower() == ".ply":
        _save_ply(cloud, path, binary)
    else:
        np.savetxt(path, cloud.points, delimiter=",", fmt="%.9g")


def _load_ply(path: Path, timestamp: float) -> PointCloud:
    with open(path, "rb") as f:
        header = []
        while True:
            line = f.readline().decode("ascii").strip()
            header.append(line)
            if line == "end_header":
                break
        fmt = next(l.split()[1] for l in header if l.startswith("format"))
        count = int(next(l.split()[2] for l in header if l.startswith("element vertex")))
        props = [l.split()[2] for l in header if l.startswith("property")]
        if props[:3] != ["x", "y", "z"]:
            raise ValueError(f"PLY must start with x/y/z properties, got {props}")
        if fmt == "ascii":
            data = np.loadtxt(f, dtype=float, ndmin=2, max_rows=count)
            pts = data[:, :3] if data.size else np.empty((0, 3))
        elif fmt == "binary_little_endian":
            types = [l.split()[1] for l in header if l.startswith("property")]
            np_types = {"float": "<f4", "float32": "<f4", "double": "<f8", "float64": "<f8"}
            dt = np.dtype([(p, np_types[t]) for p, t in zip(props, types)])
            raw = np.frombuffer(f.read(dt.itemsize * count), dtype=dt)
            pts = np.stack([raw["x"], raw["y"], raw["z"]], axis=1).astype(float)
        else:
            raise ValueError(f"unsupported PLY format {fmt}")
    return PointCloud(pts, timestamp)


def _save_ply(cloud: PointCloud, path: Path, binary: bool) -> None:
    n = len(cloud)
    fmt = "binary_little_endian" if binary else "ascii"
    header = (
        f"ply\nformat {fmt} 1.0\nelement vertex {n}\n"
        "property float x\nproperty float y\nproperty float z\nend_header\n"
    )
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        if binary:
            f.write(cloud.points.astype("<f4").tobytes())
        else:
            for x, y, z in cloud.points:
                f.write(f"{x:.9g} {y:.9g} {z:.9g}\n".encode("ascii"))


def export_depth_png(img: DepthImage, path) -> None:
    """Write a 16-bit grayscale PNG with depth quantized to millimeters.

    Lossy inspection export only; the pipeline consumes the float image.
    """
    from PIL import Image

    mm = np.where(np.isfinite(img.depth), np.clip(img.depth * 1000.0, 0, 65535), 0)
    Image.fromarray(mm.astype(np.uint16)).save(path)
