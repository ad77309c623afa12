"""Seeded synthetic scenes: clouds, detections and ground truth.

Objects are axis-aligned boxes.  Camera-visible faces are sampled at a
fixed surface density, range noise is added along the sensor ray, and
exact 2D boxes come from projecting the box corners.  Everything is
reproducible from the seed; per-frame seeds are derived as seed XOR
frame index.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .cloud import PointCloud, save_cloud
from .detect import ClassLabel, Detection, save_detections
from .errors import InvalidSpec, NonPositiveDepth
from .geometry import (
    CalibrationBundle,
    Intrinsics,
    RigidTransform,
    WorldPoint,
    world_to_pixel,
)
from .sync import ManifestEntry, save_manifest

DEFAULT_DIMS = {
    ClassLabel.MIC: (3.0, 6.0, 3.0),  # depth along the viewing axis, width, height
    ClassLabel.HUMAN: (0.4, 0.5, 1.7),
    ClassLabel.MIC_FRAME: (3.0, 6.0, 0.4),
    ClassLabel.HOOK: (0.4, 0.4, 0.6),
}


def default_calibration() -> CalibrationBundle:
    """Synthetic rig: world x forward, y left, z up; sensor head 1.8 m up."""
    lidar_to_camera = RigidTransform(
        np.array([[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]]), np.zeros(3)
    )
    world_to_lidar = RigidTransform(np.eye(3), np.array([0.0, 0.0, -1.8]))
    return CalibrationBundle(
        intrinsics=Intrinsics(631.18, 633.36, 640.0, 400.0),
        lidar_to_camera=lidar_to_camera,
        world_to_lidar=world_to_lidar,
        image_width=1280,
        image_height=800,
    )


@dataclass(frozen=True)
class SceneObject:
    label: ClassLabel
    center: tuple  # world (x, y, z) of the box center
    dims: tuple = None

    def __post_init__(self):
        if self.dims is None:
            object.__setattr__(self, "dims", DEFAULT_DIMS[self.label])


@dataclass(frozen=True)
class SceneSpec:
    objects: tuple
    calibration: CalibrationBundle = field(default_factory=default_calibration)
    density: float = 150.0  # surface points per square meter
    noise_sigma: float = 0.02  # meters, along the sensor ray
    seed: int = 0

    def __post_init__(self):
        if self.density <= 0:
            raise InvalidSpec("density must be positive")
        if self.noise_sigma < 0:
            raise InvalidSpec("noise sigma must be nonnegative")
        for o in self.objects:
            if any(d <= 0 for d in o.dims):
                raise InvalidSpec(f"object dims must be positive, got {o.dims}")


def _sensor_position_world(calib: CalibrationBundle) -> np.ndarray:
    return calib.world_to_lidar.inverse().apply(np.zeros(3))


def _box_faces(center, dims):
    cx, cy, cz = center
    hx, hy, hz = [d / 2 for d in dims]
    # (normal axis, sign, face center)
    faces = []
    for axis, h in ((0, hx), (1, hy), (2, hz)):
        for sign in (-1.0, 1.0):
            c = np.array([cx, cy, cz])
            c[axis] += sign * h
            faces.append((axis, sign, c))
    return faces


def _sample_object(obj: SceneObject, calib, density, rng) -> np.ndarray:
    """Sample points on the faces of the box that face the sensor."""
    sensor = _sensor_position_world(calib)
    dims = np.array(obj.dims)
    pts = []
    for axis, sign, face_center in _box_faces(obj.center, obj.dims):
        normal = np.zeros(3)
        normal[axis] = sign
        if np.dot(normal, sensor - face_center) <= 0:
            continue
        u_axis, v_axis = [a for a in range(3) if a != axis]
        area = dims[u_axis] * dims[v_axis]
        n = max(int(round(area * density)), 1)
        uv = rng.uniform(-0.5, 0.5, size=(n, 2))
        face_pts = np.tile(face_center, (n, 1))
        face_pts[:, u_axis] += uv[:, 0] * dims[u_axis]
        face_pts[:, v_axis] += uv[:, 1] * dims[v_axis]
        pts.append(face_pts)
    return np.concatenate(pts) if pts else np.empty((0, 3))


def _project_bbox(obj: SceneObject, calib: CalibrationBundle):
    """Exact pixel box from the projected corners; None when not visible."""
    cx, cy, cz = obj.center
    hx, hy, hz = [d / 2 for d in obj.dims]
    us, vs = [], []
    for sx in (-1, 1):
        for sy in (-1, 1):
            for sz in (-1, 1):
                w = WorldPoint(cx + sx * hx, cy + sy * hy, cz + sz * hz)
                try:
                    p = world_to_pixel(w, calib)
                except NonPositiveDepth:
                    return None
                us.append(p.u)
                vs.append(p.v)
    u0 = max(min(us), 0.0)
    v0 = max(min(vs), 0.0)
    u1 = min(max(us), float(calib.image_width))
    v1 = min(max(vs), float(calib.image_height))
    if u1 - u0 < 2 or v1 - v0 < 2:
        return None
    return (u0, v0, u1, v1)


def generate_scene(spec: SceneSpec):
    """Build one frame: (cloud, ground-truth detections, ground-truth positions).

    Ground-truth positions are the box centers keyed by object index.
    """
    rng = np.random.default_rng(spec.seed)
    calib = spec.calibration
    sensor = _sensor_position_world(calib)
    all_pts = []
    detections = []
    truths = []
    for obj in spec.objects:
        pts = _sample_object(obj, calib, spec.density, rng)
        if spec.noise_sigma > 0 and len(pts):
            rays = pts - sensor
            rays /= np.linalg.norm(rays, axis=1, keepdims=True)
            pts = pts + rays * rng.normal(0.0, spec.noise_sigma, size=(len(pts), 1))
        all_pts.append(pts)
        bbox = _project_bbox(obj, calib)
        if bbox is not None:
            detections.append(Detection(bbox, obj.label, 1.0))
            truths.append((obj.label, WorldPoint(*obj.center)))
    world_pts = np.concatenate(all_pts) if all_pts else np.empty((0, 3))
    cloud = PointCloud(calib.world_to_lidar.apply(world_pts))
    return cloud, detections, truths


# --- scripted lifts ---------------------------------------------------------


@dataclass(frozen=True)
class HumanPath:
    """Piecewise-linear walk: waypoints of (time, x, y, z)."""

    waypoints: tuple

    def position(self, t):
        wp = self.waypoints
        if t < wp[0][0] or t > wp[-1][0]:
            return None
        for (t0, *p0), (t1, *p1) in zip(wp, wp[1:]):
            if t0 <= t <= t1:
                a = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
                return tuple(np.array(p0) * (1 - a) + np.array(p1) * a)
        return None


@dataclass(frozen=True)
class LiftScript:
    """Scripted module lift: height profile plus optional walking humans."""

    mic_base: tuple  # world center of the module at rest
    profile: tuple  # (time, height) pairs, time strictly increasing
    humans: tuple = ()
    fps: float = 10.0
    mic_dims: tuple = DEFAULT_DIMS[ClassLabel.MIC]

    def __post_init__(self):
        ts = [t for t, _ in self.profile]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvalidSpec("profile times must be strictly increasing")

    def height(self, t):
        ts = [p[0] for p in self.profile]
        hs = [p[1] for p in self.profile]
        return float(np.interp(t, ts, hs))

    @property
    def duration(self):
        return self.profile[-1][0]


def generate_lift(spec: SceneSpec, script: LiftScript, out_dir):
    """Write a full replay bundle for a scripted lift.

    Produces clouds/, detections/, manifest.json and truth.json under
    out_dir.  Frame i reuses the scene generator with seed ^ i.
    """
    out = Path(out_dir)
    (out / "clouds").mkdir(parents=True, exist_ok=True)
    (out / "detections").mkdir(parents=True, exist_ok=True)
    n_frames = int(round(script.duration * script.fps)) + 1
    entries = []
    truth_frames = []
    for i in range(n_frames):
        t = i / script.fps
        mic_center = (
            script.mic_base[0],
            script.mic_base[1],
            script.mic_base[2] + script.height(t),
        )
        objects = [SceneObject(ClassLabel.MIC, mic_center, script.mic_dims)]
        human_positions = []
        for path in script.humans:
            p = path.position(t)
            if p is not None:
                human_positions.append(p)
                objects.append(SceneObject(ClassLabel.HUMAN, p))
        frame_spec = SceneSpec(
            objects=tuple(objects),
            calibration=spec.calibration,
            density=spec.density,
            noise_sigma=spec.noise_sigma,
            seed=spec.seed ^ i,
        )
        cloud, detections, _ = generate_scene(frame_spec)
        cloud_file = f"clouds/{i:06d}.ply"
        det_file = f"detections/{i:06d}.json"
        save_cloud(cloud, out / cloud_file)
        save_detections(detections, out / det_file)
        entries.append(ManifestEntry(round(t, 6), det_file, cloud_file, round(t, 6)))
        truth_frames.append(
            {
                "ts": round(t, 6),
                "mic": [round(x, 6) for x in mic_center],
                "humans": [[round(x, 6) for x in p] for p in human_positions],
            }
        )
    save_manifest(entries, out / "manifest.json")
    (out / "truth.json").write_text(json.dumps({"frames": truth_frames}, indent=1, sort_keys=True))
    return out


# --- scene spec files -------------------------------------------------------


def load_scene_spec(path):
    """Read a scene/lift spec document.  Returns (SceneSpec, LiftScript | None)."""
    doc = yaml.safe_load(Path(path).read_text())
    objects = tuple(
        SceneObject(
            ClassLabel(o["label"]),
            tuple(float(x) for x in o["center"]),
            tuple(float(x) for x in o["dims"]) if "dims" in o else None,
        )
        for o in doc.get("objects", [])
    )
    spec = SceneSpec(
        objects=objects,
        density=float(doc.get("density", 150.0)),
        noise_sigma=float(doc.get("noise_sigma", 0.02)),
        seed=int(doc.get("seed", 0)),
    )
    script = None
    if "lift" in doc:
        lift = doc["lift"]
        humans = tuple(
            HumanPath(tuple(tuple(float(x) for x in w) for w in h["waypoints"]))
            for h in lift.get("humans", [])
        )
        script = LiftScript(
            mic_base=tuple(float(x) for x in lift["mic_base"]),
            profile=tuple((float(t), float(h)) for t, h in lift["profile"]),
            humans=humans,
            fps=float(lift.get("fps", 10.0)),
        )
    return spec, script
