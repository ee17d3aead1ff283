"""Keypoint trajectory extraction from decoded GIF frames.

A deterministic segmentation-plus-clustering tracker: each frame is
split into background (color close to the modal border color) and
foreground, the foreground pixels are clustered with k-means, and
cluster identity is carried across frames by warm starting from the
previous frame's centroids and then solving a minimum-cost assignment.

Everything is tie-broken by pixel scan order, so the same input always
yields the same trajectories. Byte-identical consecutive frames copy
the previous keypoints outright, which makes trajectories on a static
animation exactly constant.

Trajectories can also come from an external tool via JSON interchange
(`import_trajectories` / `export_trajectories`).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .gif import FrameSequence

SEGMENT_THRESHOLD = 40.0  # Euclidean RGB distance from background, 0..255 scale
KMEANS_MAX_ITER = 50
KMEANS_TOL = 1e-4  # max centroid movement, normalized units


@dataclass
class KeypointTrajectorySet:
    """Positions of N tracked keypoints over F frames, normalized [0, 1]^2."""

    positions: np.ndarray  # (N, F, 2) float64, x right, y down
    source: str = "kmeans"

    @property
    def num_keypoints(self) -> int:
        return int(self.positions.shape[0])

    @property
    def num_frames(self) -> int:
        return int(self.positions.shape[1])

    def displacements(self) -> np.ndarray:
        """(N, F, 2) offsets from each keypoint's first-frame position."""
        return self.positions - self.positions[:, :1, :]


def _modal_border_color(frame: np.ndarray) -> np.ndarray:
    """Most common color on the 1-pixel border; ties pick the smallest RGB."""
    border = np.concatenate(
        [frame[0], frame[-1], frame[1:-1, 0], frame[1:-1, -1]], axis=0
    )
    packed = (
        border[:, 0].astype(np.uint32) << 16
        | border[:, 1].astype(np.uint32) << 8
        | border[:, 2].astype(np.uint32)
    )
    values, counts = np.unique(packed, return_counts=True)
    win = int(values[np.argmax(counts)])
    return np.array([(win >> 16) & 0xFF, (win >> 8) & 0xFF, win & 0xFF], dtype=np.uint8)


def foreground_mask(frame: np.ndarray, threshold: float = SEGMENT_THRESHOLD) -> np.ndarray:
    """Boolean mask of pixels farther than `threshold` from the border color."""
    bg = _modal_border_color(frame)
    diff = frame.astype(np.int64) - bg.astype(np.int64)
    return (diff * diff).sum(axis=2) > threshold * threshold


def _foreground_points(frame: np.ndarray) -> np.ndarray:
    """Normalized pixel-center coordinates of foreground pixels, scan order."""
    mask = foreground_mask(frame)
    rows, cols = np.nonzero(mask)
    h, w = frame.shape[:2]
    return np.column_stack([(cols + 0.5) / w, (rows + 0.5) / h])


def _seed_centroids(points: np.ndarray, n: int) -> np.ndarray:
    """Farthest-point seeding anchored at the cloud centroid.

    First seed is the point nearest the centroid; each later seed
    maximizes its minimum distance to the seeds so far. argmin/argmax
    take the first hit, so ties resolve to the earliest scan position.
    """
    center = points.mean(axis=0)
    d = ((points - center) ** 2).sum(axis=1)
    seeds = [points[int(np.argmin(d))]]
    min_d = ((points - seeds[0]) ** 2).sum(axis=1)
    while len(seeds) < n:
        nxt = points[int(np.argmax(min_d))]
        seeds.append(nxt)
        min_d = np.minimum(min_d, ((points - nxt) ** 2).sum(axis=1))
    return np.array(seeds)


def _kmeans(points: np.ndarray, init: np.ndarray) -> np.ndarray:
    """Lloyd iterations from `init`; an empty cluster keeps its centroid.

    Stops on stable assignments, centroid movement below KMEANS_TOL, or
    KMEANS_MAX_ITER rounds. Stable-assignment stopping returns the
    input centroids bit-for-bit when they are already converged.
    """
    centroids = init.copy()
    prev_assign = None
    for _ in range(KMEANS_MAX_ITER):
        d = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = np.argmin(d, axis=1)
        if prev_assign is not None and np.array_equal(assign, prev_assign):
            return centroids
        updated = centroids.copy()
        for k in range(len(centroids)):
            member = points[assign == k]
            if len(member):
                updated[k] = member.mean(axis=0)
        move = np.abs(updated - centroids).max()
        centroids = updated
        prev_assign = assign
        if move < KMEANS_TOL:
            break
    return centroids


def extract_keypoints(seq: FrameSequence, n: int = 10) -> KeypointTrajectorySet:
    """Track `n` keypoints through all frames of a decoded sequence.

    Raises ValueError when the first frame has no foreground; a later
    all-background frame carries the previous keypoints and warns.
    """
    if n < 1:
        raise ValueError(f"keypoint count must be positive, got {n}")
    frames = seq.frames
    n_frames = seq.num_frames
    out = np.empty((n, n_frames, 2), dtype=np.float64)

    prev_frame = None
    for f in range(n_frames):
        frame = frames[f]
        if prev_frame is not None and np.array_equal(frame, prev_frame):
            out[:, f] = out[:, f - 1]
            prev_frame = frame
            continue
        points = _foreground_points(frame)
        if len(points) == 0:
            if f == 0:
                raise ValueError("first frame has no foreground to track")
            warnings.warn(f"frame {f + 1} has no foreground; carrying keypoints over")
            out[:, f] = out[:, f - 1]
            prev_frame = frame
            continue
        if f == 0:
            if len(points) >= n:
                init = _seed_centroids(points, n)
            else:
                warnings.warn(
                    f"only {len(points)} foreground pixels for {n} keypoints"
                )
                init = points[np.arange(n) % len(points)]
            out[:, 0] = _kmeans(points, init)
        else:
            centroids = _kmeans(points, out[:, f - 1].copy())
            # re-anchor identity to the previous frame by assignment cost
            cost = ((out[:, f - 1][:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
            rows, cols = linear_sum_assignment(cost)
            out[rows, f] = centroids[cols]
        prev_frame = frame
    return KeypointTrajectorySet(out)


# -- interchange -------------------------------------------------------------


def export_trajectories(traj: KeypointTrajectorySet) -> str:
    doc = {
        "version": 1,
        "n": traj.num_keypoints,
        "f": traj.num_frames,
        "source": traj.source,
        "positions": traj.positions.tolist(),
    }
    return json.dumps(doc, indent=2)


def import_trajectories(text: str) -> KeypointTrajectorySet:
    """Parse trajectory JSON, validating shape and coordinate range.

    Errors name the first offending keypoint and frame (1-based).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"trajectory file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError("trajectory document must be a JSON object")
    if doc.get("version") != 1:
        raise ValueError(f"unsupported trajectory version {doc.get('version')!r}")
    for key in ("n", "f", "positions"):
        if key not in doc:
            raise ValueError(f"trajectory document missing {key!r}")
    try:
        positions = np.asarray(doc["positions"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"positions are not a numeric array: {exc}") from exc
    expect = (doc["n"], doc["f"], 2)
    if positions.shape != expect:
        raise ValueError(
            f"positions shape {positions.shape} does not match "
            f"n={doc['n']}, f={doc['f']}"
        )
    bad = ~np.isfinite(positions) | (positions < 0.0) | (positions > 1.0)
    if bad.any():
        i, f, _ = np.argwhere(bad)[0]
        raise ValueError(
            f"keypoint {i + 1} frame {f + 1}: coordinate outside [0, 1] or not finite"
        )
    return KeypointTrajectorySet(positions, source=str(doc.get("source", "external")))
