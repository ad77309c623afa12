"""Timestamp pairing of detection-bearing image frames with point clouds.

Image frames drive the pairing (the camera runs faster than the LiDAR and
detections drive the rest of the pipeline).  Matching is greedy, in order,
nearest cloud wins, ties go to the earlier cloud, and each cloud is used
at most once.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import UnorderedStream

DEFAULT_TOLERANCE = 0.06  # seconds; just over half the 10 Hz LiDAR period


@dataclass(frozen=True)
class FramePair:
    """One synchronized (detections, cloud) pair."""

    detections: list
    cloud: object
    image_ts: float
    cloud_ts: float

    @property
    def skew(self) -> float:
        return abs(self.image_ts - self.cloud_ts)


@dataclass
class PairingResult:
    pairs: list
    dropped_images: int = 0
    unused_clouds: int = 0


def _check_ordered(ts, name):
    for a, b in zip(ts, ts[1:]):
        if b < a:
            raise UnorderedStream(f"{name} timestamps regress: {a} -> {b}")


def pair_streams(image_frames, clouds, tolerance: float = DEFAULT_TOLERANCE) -> PairingResult:
    """Match each image frame to the nearest unused cloud within tolerance.

    image_frames: sequence of (timestamp, detections); clouds: sequence of
    (timestamp, cloud).  Both must be nondecreasing in timestamp.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    image_frames = list(image_frames)
    clouds = list(clouds)
    _check_ordered([t for t, _ in image_frames], "image")
    _check_ordered([t for t, _ in clouds], "cloud")

    pairs = []
    dropped = 0
    ci = 0
    for its, dets in image_frames:
        # Advance while the next cloud is at least as close (strict improvement
        # keeps ties on the earlier cloud).
        while ci + 1 < len(clouds) and abs(clouds[ci + 1][0] - its) < abs(clouds[ci][0] - its):
            ci += 1
        if ci < len(clouds) and abs(clouds[ci][0] - its) <= tolerance:
            cts, cloud = clouds[ci]
            pairs.append(FramePair(dets, cloud, its, cts))
            ci += 1
        else:
            dropped += 1
    return PairingResult(pairs, dropped, unused_clouds=len(clouds) - len(pairs))


# --- replay manifest --------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    timestamp: float
    detections_file: str
    cloud_file: str
    cloud_timestamp: float


def load_manifest(path):
    """Read a replay manifest: a JSON index of (timestamp, detections, cloud) triples."""
    path = Path(path)
    doc = json.loads(path.read_text())
    entries = [
        ManifestEntry(
            timestamp=float(e["timestamp"]),
            detections_file=e["detections"],
            cloud_file=e["cloud"],
            cloud_timestamp=float(e.get("cloud_timestamp", e["timestamp"])),
        )
        for e in doc["frames"]
    ]
    return entries


def save_manifest(entries, path) -> None:
    doc = {
        "frames": [
            {
                "timestamp": e.timestamp,
                "detections": e.detections_file,
                "cloud": e.cloud_file,
                "cloud_timestamp": e.cloud_timestamp,
            }
            for e in entries
        ]
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))
