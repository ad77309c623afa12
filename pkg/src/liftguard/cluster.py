"""Per-bounding-box depth extraction and 1-D depth clustering.

An unoccluded target separates into foreground (the target) and
background; an occluded one into foreground (the occluder), midground
(the target) and background.  The target depth is the median of the
relevant cluster.  Everything here is deterministic: quantile seeding,
no randomness.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .cloud import DepthImage
from .detect import Detection
from .errors import EmptySamples, LengthMismatch, TooFewSamples

KMEANS_TOL = 1e-4  # meters of center movement
KMEANS_MAX_ITER = 100
DEFAULT_BANDWIDTH = 0.5  # meters; placeholder pending field data
OCCLUSION_OVERLAP = 0.2  # fraction of the target box covered
OCCLUSION_DEPTH_GAP = 1.0  # meters nearer than the target median


class ClusterMethod(str, Enum):
    KMEANS = "kmeans"
    AVERAGING = "averaging"
    MEAN_SHIFT = "mean_shift"


@dataclass(frozen=True)
class ClusterResult:
    centers: np.ndarray  # ascending
    assignments: np.ndarray  # per-sample index into centers
    inertia: float


def extract_bbox_depths(img: DepthImage, bbox) -> np.ndarray:
    """All populated depths inside the box, row-major order."""
    u0, v0, u1, v1 = bbox
    u0 = max(int(np.floor(u0)), 0)
    v0 = max(int(np.floor(v0)), 0)
    u1 = min(int(np.ceil(u1)), img.width)
    v1 = min(int(np.ceil(v1)), img.height)
    patch = img.depth[v0:v1, u0:u1].ravel()
    return patch[np.isfinite(patch)]


def remove_depth_outliers(s) -> np.ndarray:
    """Tukey fence: drop values outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR]."""
    s = np.asarray(s, dtype=float)
    if s.size == 0:
        return s
    q1, q3 = np.percentile(s, [25, 75])
    iqr = q3 - q1
    keep = (s >= q1 - 1.5 * iqr) & (s <= q3 + 1.5 * iqr)
    return s[keep]


def _quantile_seeds(sorted_s: np.ndarray, k: int) -> np.ndarray:
    qs = {2: [25, 75], 3: [17, 50, 83]}[k]
    return np.percentile(sorted_s, qs)


def _farthest_seeds(sorted_s: np.ndarray, k: int) -> np.ndarray:
    # Median first, then greedily the sample farthest from any seed so
    # far.  Unlike quantile seeds this lands one seed per mode even when
    # cluster populations are very unbalanced.
    seeds = [float(np.median(sorted_s))]
    for _ in range(k - 1):
        d = np.abs(sorted_s[:, None] - np.asarray(seeds)[None, :]).min(axis=1)
        seeds.append(float(sorted_s[int(np.argmax(d))]))
    return np.sort(np.asarray(seeds))


_EXACT_REFINE_LIMIT = 64


def _best_contiguous_centers(sorted_s: np.ndarray, k: int) -> np.ndarray:
    """Exact optimum over contiguous partitions of the sorted samples.

    In 1-D the optimal clusters are contiguous in sorted order, so for
    small inputs the global optimum is an enumeration over cut points.
    """
    from itertools import combinations

    n = len(sorted_s)
    c1 = np.concatenate([[0.0], np.cumsum(sorted_s)])
    c2 = np.concatenate([[0.0], np.cumsum(sorted_s**2)])

    def seg_cost(a, b):  # sum of squared deviations of sorted_s[a:b]
        m = b - a
        sm = c1[b] - c1[a]
        return (c2[b] - c2[a]) - sm * sm / m

    best_cost, best_bounds = np.inf, None
    for cuts in combinations(range(1, n), k - 1):
        bounds = (0, *cuts, n)
        cost = sum(seg_cost(a, b) for a, b in zip(bounds, bounds[1:]))
        if cost < best_cost - 1e-15:
            best_cost, best_bounds = cost, bounds
    return np.array(
        [sorted_s[a:b].mean() for a, b in zip(best_bounds, best_bounds[1:])]
    )


def kmeans_1d(s, k: int, max_iter: int = KMEANS_MAX_ITER, tol: float = KMEANS_TOL) -> ClusterResult:
    """Lloyd's algorithm on 1-D samples with quantile seeding.

    Deterministic and order-free: the seeds are percentiles of the sorted
    samples, so identical multisets always give identical results.  Small
    inputs get an exact contiguous-partition refinement afterwards; Lloyd
    alone can stall in a local optimum there.
    """
    s = np.asarray(s, dtype=float)
    if k not in (2, 3):
        raise ValueError("k must be 2 or 3")
    if s.size < k:
        raise TooFewSamples(f"{s.size} samples for k={k}")
    sorted_s = np.sort(s)

    def lloyd(centers):
        for _ in range(max_iter):
            assign = np.argmin(np.abs(s[:, None] - centers[None, :]), axis=1)
            new_centers = centers.copy()
            for j in range(k):
                members = s[assign == j]
                if members.size:
                    new_centers[j] = members.mean()
            if np.abs(new_centers - centers).max() < tol:
                return new_centers
            centers = new_centers
        return centers

    def total_inertia(centers):
        assign = np.argmin(np.abs(s[:, None] - centers[None, :]), axis=1)
        return float(np.sum((s - centers[assign]) ** 2))

    # Either seeding alone can stall in a local optimum: quantile seeds
    # collapse modes with very unbalanced populations, farthest-point
    # seeds chase isolated extremes.  Run Lloyd from both, keep the best.
    candidates = [
        lloyd(_quantile_seeds(sorted_s, k)),
        lloyd(_farthest_seeds(sorted_s, k)),
    ]
    if s.size <= _EXACT_REFINE_LIMIT:
        candidates.append(_best_contiguous_centers(sorted_s, k))
    centers = min(candidates, key=total_inertia)
    assign = np.argmin(np.abs(s[:, None] - centers[None, :]), axis=1)
    # Drop empty clusters, then present centers in ascending depth order.
    occupied = np.unique(assign)
    centers = centers[occupied]
    remap = {old: new for new, old in enumerate(occupied)}
    assign = np.array([remap[a] for a in assign])
    order = np.argsort(centers)
    centers = centers[order]
    rank = np.argsort(order)
    assign = rank[assign]
    inertia = float(np.sum((s - centers[assign]) ** 2))
    return ClusterResult(centers, assign, inertia)


def mean_shift_1d(s, bandwidth: float = DEFAULT_BANDWIDTH) -> ClusterResult:
    """Flat-kernel mean shift; modes closer than bandwidth/2 are merged."""
    s = np.asarray(s, dtype=float)
    if s.size == 0:
        raise TooFewSamples("mean shift needs at least one sample")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    modes = s.astype(float).copy()
    for _ in range(200):
        shifted = np.array([s[np.abs(s - m) <= bandwidth].mean() for m in modes])
        if np.abs(shifted - modes).max() < 1e-9:
            modes = shifted
            break
        modes = shifted
    # Merge converged modes that landed within half a bandwidth of each other.
    centers = []
    for m in np.sort(modes):
        if not centers or m - centers[-1] > bandwidth / 2:
            centers.append(m)
        else:
            centers[-1] = (centers[-1] + m) / 2
    centers = np.array(centers)
    assign = np.argmin(np.abs(s[:, None] - centers[None, :]), axis=1)
    inertia = float(np.sum((s - centers[assign]) ** 2))
    return ClusterResult(centers, assign, inertia)


def averaging_depth(s) -> float:
    """Plain mean of the (already outlier-filtered) samples."""
    s = np.asarray(s, dtype=float)
    if s.size == 0:
        raise EmptySamples("cannot average zero samples")
    return float(s.mean())


def occlusion_check(
    target: Detection,
    others,
    depth_img: DepthImage,
    overlap_thresh: float = OCCLUSION_OVERLAP,
    depth_gap: float = OCCLUSION_DEPTH_GAP,
) -> bool:
    """Is some other detection in front of the target box?

    True when another box covers at least overlap_thresh of the target's
    area and the overlap region's median depth is at least depth_gap
    nearer than the target box's overall median.
    """
    target_depths = extract_bbox_depths(depth_img, target.bbox)
    if target_depths.size == 0:
        return False
    target_median = float(np.median(target_depths))
    tu0, tv0, tu1, tv1 = target.bbox
    target_area = (tu1 - tu0) * (tv1 - tv0)
    for other in others:
        ou0, ov0, ou1, ov1 = other.bbox
        iu0, iv0 = max(tu0, ou0), max(tv0, ov0)
        iu1, iv1 = min(tu1, ou1), min(tv1, ov1)
        if iu1 <= iu0 or iv1 <= iv0:
            continue
        if (iu1 - iu0) * (iv1 - iv0) / target_area < overlap_thresh:
            continue
        region = extract_bbox_depths(depth_img, (iu0, iv0, iu1, iv1))
        if region.size and target_median - float(np.median(region)) >= depth_gap:
            return True
    return False


def estimate_target_depth(
    s, occluded: bool, method: ClusterMethod = ClusterMethod.KMEANS,
    bandwidth: float = DEFAULT_BANDWIDTH,
) -> float:
    """Pick the target's depth from its in-box samples.

    Unoccluded: 2 clusters, median of the nearest (the target is the
    foreground).  Occluded: 3 clusters, median of the middle one (the
    occluder owns the foreground).  Averaging ignores occlusion.  When
    there are fewer samples than clusters, fall back to the plain median.
    """
    s = np.asarray(s, dtype=float)
    if s.size == 0:
        raise EmptySamples("no depth samples in box")
    if method is ClusterMethod.AVERAGING:
        return averaging_depth(s)
    k = 3 if occluded else 2
    if s.size < k:
        return float(np.median(s))
    if method is ClusterMethod.MEAN_SHIFT:
        result = mean_shift_1d(s, bandwidth)
        if len(result.centers) < k:
            # Too few modes to separate; nearest mode's members stand in.
            pick = 0
        else:
            pick = 1 if occluded else 0
    else:
        result = kmeans_1d(s, k)
        if len(result.centers) < k:
            pick = min(1 if occluded else 0, len(result.centers) - 1)
        else:
            pick = 1 if occluded else 0
    members = s[result.assignments == pick]
    return float(np.median(members))


def evaluate_depth_rmse(estimates, truth) -> float:
    """Root mean square error between estimated and true depths."""
    estimates = np.asarray(estimates, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimates.shape != truth.shape or estimates.size == 0:
        raise LengthMismatch("estimate and truth lists must have equal nonzero length")
    return float(np.sqrt(np.mean((estimates - truth) ** 2)))
