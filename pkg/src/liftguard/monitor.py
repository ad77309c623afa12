"""Per-frame pipeline orchestration, danger-zone logic and alarms.

A frame pair is rendered into a depth image, each detection gets a
clustered depth at its box center, and the resulting world positions
feed a cylindrical danger zone around the lifted module.  Alarming is a
small debounced state machine; the 3-3-3 lifting-procedure check runs
over the accumulated lift track.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np
import yaml

from . import cluster as cl
from .cloud import DepthImage, PointCloud, denoise, render_depth_image, voxel_downsample
from .detect import ClassLabel, Detection
from .errors import EmptySamples, EmptyTrack
from .geometry import CalibrationBundle, PixelPoint, WorldPoint, pixel_depth_to_world
from .sync import DEFAULT_TOLERANCE, FramePair


@dataclass(frozen=True)
class PipelineConfig:
    clustering_method: cl.ClusterMethod = cl.ClusterMethod.KMEANS
    danger_radius: float = 3.0
    n_on: int = 3
    n_off: int = 10
    occlusion_overlap: float = cl.OCCLUSION_OVERLAP
    occlusion_depth_gap: float = cl.OCCLUSION_DEPTH_GAP
    mean_shift_bandwidth: float = cl.DEFAULT_BANDWIDTH
    voxel_size: float = 0.05
    denoise_k: int = 16
    denoise_std_ratio: float = 2.0
    sync_tolerance: float = DEFAULT_TOLERANCE
    micframe_z_offset: float = 1.5  # frame sits atop the module
    hook_z_offset: float = 2.0
    hold_tolerance: float = 0.05  # meters around the 0.3 m lift band
    surface_depth_offset: float = 0.0  # optional half-depth compensation
    preprocess: bool = True

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        doc = yaml.safe_load(Path(path).read_text()) or {}
        if "clustering_method" in doc:
            doc["clustering_method"] = cl.ClusterMethod(doc["clustering_method"])
        return cls(**doc)

    def save(self, path) -> None:
        doc = {k: (v.value if isinstance(v, Enum) else v) for k, v in self.__dict__.items()}
        Path(path).write_text(yaml.safe_dump(doc, sort_keys=True))


@dataclass(frozen=True)
class WorldObject:
    label: ClassLabel
    position: WorldPoint
    depth_used: float
    source_bbox: tuple
    method: cl.ClusterMethod


@dataclass(frozen=True)
class DangerZone:
    """Ground-perpendicular cylinder of radius r centered under the module."""

    center_xy: tuple
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("danger radius must be positive")


def in_danger_zone(p: WorldPoint, zone: DangerZone) -> bool:
    """Strictly inside the cylinder, height ignored."""
    dx = p.x - zone.center_xy[0]
    dy = p.y - zone.center_xy[1]
    return math.hypot(dx, dy) < zone.radius


@dataclass(frozen=True)
class SafetyVerdict:
    timestamp: float
    mic: WorldObject | None
    humans: tuple
    intruders: tuple
    zone: DangerZone | None
    no_target: bool
    compliance_violation: bool = False


def _localize(det: Detection, depth_img: DepthImage, others, calib, config) -> WorldObject | None:
    depths = cl.extract_bbox_depths(depth_img, det.bbox)
    depths = cl.remove_depth_outliers(depths)
    if depths.size == 0:
        return None
    occluded = cl.occlusion_check(
        det, others, depth_img,
        overlap_thresh=config.occlusion_overlap, depth_gap=config.occlusion_depth_gap,
    )
    try:
        depth = cl.estimate_target_depth(
            depths, occluded, config.clustering_method, config.mean_shift_bandwidth
        )
    except EmptySamples:
        return None
    depth = depth + config.surface_depth_offset
    u, v = det.center
    pos = pixel_depth_to_world(PixelPoint(u, v, depth), calib)
    return WorldObject(det.label, pos, depth, det.bbox, config.clustering_method)


_FALLBACK_ORDER = (ClassLabel.MIC, ClassLabel.MIC_FRAME, ClassLabel.HOOK)


def process_frame(pair: FramePair, calib: CalibrationBundle, config: PipelineConfig) -> SafetyVerdict:
    """Run one synchronized frame through depth rendering, clustering and the zone test."""
    cloud = pair.cloud
    if config.preprocess and len(cloud) > 0:
        cloud = denoise(cloud, config.denoise_k, config.denoise_std_ratio)
        cloud = voxel_downsample(cloud, config.voxel_size)
    depth_img = render_depth_image(cloud, calib)

    dets = list(pair.detections)
    objects = {}
    for det in dets:
        others = [d for d in dets if d is not det]
        obj = _localize(det, depth_img, others, calib, config)
        if obj is not None:
            objects.setdefault(det.label, []).append(obj)

    humans = tuple(objects.get(ClassLabel.HUMAN, []))

    mic = None
    for label in _FALLBACK_ORDER:
        candidates = objects.get(label)
        if candidates:
            mic = candidates[0]
            if label is ClassLabel.MIC_FRAME:
                mic = _offset_down(mic, config.micframe_z_offset)
            elif label is ClassLabel.HOOK:
                mic = _offset_down(mic, config.hook_z_offset)
            break

    if mic is None:
        return SafetyVerdict(pair.image_ts, None, humans, (), None, no_target=True)

    zone = DangerZone((mic.position.x, mic.position.y), config.danger_radius)
    intruders = tuple(h for h in humans if in_danger_zone(h.position, zone))
    return SafetyVerdict(pair.image_ts, mic, humans, intruders, zone, no_target=False)


def _offset_down(obj: WorldObject, dz: float) -> WorldObject:
    p = obj.position
    return replace(obj, position=WorldPoint(p.x, p.y, p.z - dz))


# --- alarm state machine ----------------------------------------------------


class AlarmMode(str, Enum):
    IDLE = "idle"
    WARNING = "warning"
    ALARM = "alarm"


class AlarmCommand(str, Enum):
    AUDIBLE_ON = "audible_on"
    AUDIBLE_OFF = "audible_off"
    VISUAL_ON = "visual_on"
    VISUAL_OFF = "visual_off"


@dataclass(frozen=True)
class AlarmState:
    mode: AlarmMode = AlarmMode.IDLE
    consecutive_danger_frames: int = 0
    consecutive_clear_frames: int = 0
    last_transition_ts: float = 0.0


def alarm_update(state: AlarmState, verdict: SafetyVerdict, ts: float,
                 n_on: int = 3, n_off: int = 10):
    """Debounced transitions: n_on intruder frames arm, n_off clear frames clear.

    Warning covers procedure violations without an intrusion; it carries no
    hardware commands.
    """
    danger = len(verdict.intruders) > 0
    commands = []
    if danger:
        danger_frames = state.consecutive_danger_frames + 1
        clear_frames = 0
    else:
        danger_frames = 0
        clear_frames = state.consecutive_clear_frames + 1

    mode = state.mode
    transition = False
    if state.mode is not AlarmMode.ALARM and danger_frames >= n_on:
        mode = AlarmMode.ALARM
        commands = [AlarmCommand.AUDIBLE_ON, AlarmCommand.VISUAL_ON]
        transition = True
    elif state.mode is AlarmMode.ALARM and clear_frames >= n_off:
        mode = AlarmMode.IDLE
        commands = [AlarmCommand.AUDIBLE_OFF, AlarmCommand.VISUAL_OFF]
        transition = True
    elif state.mode is AlarmMode.IDLE and not danger and verdict.compliance_violation:
        mode = AlarmMode.WARNING
        transition = True
    elif state.mode is AlarmMode.WARNING and not verdict.compliance_violation and not danger:
        mode = AlarmMode.IDLE
        transition = True

    new_state = AlarmState(
        mode=mode,
        consecutive_danger_frames=danger_frames,
        consecutive_clear_frames=clear_frames,
        last_transition_ts=ts if transition else state.last_transition_ts,
    )
    return new_state, commands


# --- 3-3-3 lifting-procedure check ------------------------------------------


@dataclass(frozen=True)
class LiftTrack:
    """Time series of module world positions; height is relative to the start."""

    samples: tuple  # of (timestamp, WorldPoint)

    def __post_init__(self):
        ts = [t for t, _ in self.samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("track timestamps must be strictly increasing")

    def heights(self):
        z0 = self.samples[0][1].z
        return [(t, p.z - z0) for t, p in self.samples]


@dataclass(frozen=True)
class RuleStatus:
    passed: bool
    detail: str
    violations: tuple = ()


@dataclass(frozen=True)
class ComplianceReport:
    clearance: RuleStatus  # 3 m personnel clearance throughout
    initial_lift: RuleStatus  # reaches the 0.3 m band
    hold: RuleStatus  # stays in the band >= 3 s before ascending

    @property
    def all_passed(self) -> bool:
        return self.clearance.passed and self.initial_lift.passed and self.hold.passed


def check_333(track: LiftTrack, verdicts, clearance: float = 3.0,
              lift_height: float = 0.3, hold_seconds: float = 3.0,
              hold_tolerance: float = 0.05) -> ComplianceReport:
    """Check the lifting procedure: clearance, initial lift height, hold time."""
    if not track.samples:
        raise EmptyTrack("no track samples")

    violations = []
    by_ts = {v.timestamp: v for v in verdicts}
    for t, p in track.samples:
        v = by_ts.get(t)
        if v is None:
            continue
        for h in v.humans:
            d = math.hypot(h.position.x - p.x, h.position.y - p.y)
            if d < clearance:
                violations.append((t, d))
    rule_a = RuleStatus(
        passed=not violations,
        detail="no human within clearance" if not violations
        else f"{len(violations)} samples with a human inside {clearance} m",
        violations=tuple(violations),
    )

    heights = track.heights()
    lo, hi = lift_height - hold_tolerance, lift_height + hold_tolerance
    start = next((i for i, (_, h) in enumerate(heights) if lo <= h <= hi), None)
    if start is None:
        rule_b = RuleStatus(False, f"lift never entered the {lift_height} m band")
        rule_c = RuleStatus(False, "no hold phase found")
    else:
        rule_b = RuleStatus(True, f"entered the band at t={heights[start][0]:.3f}")
        end = start
        while end + 1 < len(heights) and lo <= heights[end + 1][1] <= hi:
            end += 1
        hold = heights[end][0] - heights[start][0]
        if hold >= hold_seconds:
            rule_c = RuleStatus(True, f"held {hold:.3f} s")
        else:
            rule_c = RuleStatus(False, f"held only {hold:.3f} s")
    return ComplianceReport(rule_a, rule_b, rule_c)


# --- localization evaluation ------------------------------------------------


def distance_error(detected: WorldPoint, truth: WorldPoint) -> float:
    """Euclidean 3-D distance between a detected and a true position."""
    return float(np.linalg.norm(detected.vec - truth.vec))


def evaluate_localization(run: dict) -> dict:
    """Per-class distance-error statistics.

    run: label -> list of (detected, truth) WorldPoint pairs.
    """
    if not run:
        raise ValueError("no localization pairs")
    report = {}
    for label, pairs in run.items():
        errors = [distance_error(d, t) for d, t in pairs]
        key = label.value if isinstance(label, Enum) else str(label)
        report[key] = {
            "errors": errors,
            "mean": float(np.mean(errors)),
            "max": float(np.max(errors)),
        }
    return report


# --- event log --------------------------------------------------------------


def verdict_record(v: SafetyVerdict, mode: AlarmMode) -> dict:
    def pos(o):
        return [round(o.position.x, 6), round(o.position.y, 6), round(o.position.z, 6)]

    return {
        "type": "verdict",
        "ts": round(v.timestamp, 6),
        "mic": pos(v.mic) if v.mic else None,
        "humans": [pos(h) for h in v.humans],
        "intruders": len(v.intruders),
        "no_target": v.no_target,
        "alarm_mode": mode.value,
    }


def command_record(ts: float, command: AlarmCommand) -> dict:
    return {"type": "command", "ts": round(ts, 6), "command": command.value}


def write_event_log(records, path) -> None:
    with open(path, "w") as f:
        for r in records:
            f.write(json.dumps(r, sort_keys=True) + "\n")
