"""Transfer keypoint motion onto control points by inverse-distance weights.

Each control point C_j follows a convex combination of the keypoint
displacements. Weights depend only on the first frame: the closer a
keypoint starts to C_j^0, the more C_j follows it:

    w_ji = d_ji^-e / sum_i d_ji^-e,   d_ji = |C_j^0 - X_i^1|

and the aligned position is C_j^f = C_j^0 + sum_i w_ji (X_i^f - X_i^1).
Frame 1 therefore reproduces C^0 exactly, and a pure translation of all
keypoints translates every control point by the same amount.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tracking import KeypointTrajectorySet

DISTANCE_CLAMP = 1e-6  # lower bound before raising to a negative power


@dataclass(frozen=True)
class DeformParams:
    """Knobs of the deformation model.

    alpha weighs shape preservation against motion fidelity, e is the
    exponent of both the interpolation weights and the loss norms, k is
    the neighbor count of the rigidity graph. trajectory_source selects
    where the driving keypoints come from; only "driving_gif" is
    implemented, "extracted_text" is accepted here and rejected with a
    clear error by every consumer that would have to act on it.
    """

    alpha: float = 2.0
    e: float = 2.0
    k: int = 3
    trajectory_source: str = "driving_gif"

    TRAJECTORY_SOURCES = ("driving_gif", "extracted_text")

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if self.e <= 0:
            raise ValueError(f"e must be positive, got {self.e}")
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")
        if self.trajectory_source not in self.TRAJECTORY_SOURCES:
            raise ValueError(
                "trajectory_source must be one of "
                f"{', '.join(self.TRAJECTORY_SOURCES)}; "
                f"got {self.trajectory_source!r}"
            )


@dataclass
class ControlTrajectory:
    """Per-frame control positions, shape (F, M, 2), normalized y-down."""

    positions: np.ndarray

    @property
    def num_frames(self) -> int:
        return int(self.positions.shape[0])

    @property
    def num_controls(self) -> int:
        return int(self.positions.shape[1])

    def copy(self) -> "ControlTrajectory":
        return ControlTrajectory(self.positions.copy())


def interpolation_weights(
    controls0: np.ndarray, keypoints1: np.ndarray, e: float = 2.0
) -> np.ndarray:
    """(M, N) row-stochastic weights from first-frame distances."""
    c = np.asarray(controls0, dtype=np.float64)
    x = np.asarray(keypoints1, dtype=np.float64)
    if e <= 0:
        raise ValueError(f"e must be positive, got {e}")
    d = np.sqrt(((c[:, None, :] - x[None, :, :]) ** 2).sum(axis=2))
    d = np.maximum(d, DISTANCE_CLAMP)
    w = d ** -float(e)
    return w / w.sum(axis=1, keepdims=True)


def align_frames(
    controls0: np.ndarray,
    keypoints: KeypointTrajectorySet,
    e: float = 2.0,
) -> ControlTrajectory:
    """Propagate keypoint motion to every control point, every frame.

    Frame 1 equals controls0 bit for bit: the displacements there are
    exactly zero, so nothing is added.
    """
    c0 = np.asarray(controls0, dtype=np.float64)
    weights = interpolation_weights(c0, keypoints.positions[:, 0, :], e)
    disp = keypoints.displacements()  # (N, F, 2)
    n_frames = keypoints.num_frames
    out = np.empty((n_frames, len(c0), 2), dtype=np.float64)
    for f in range(n_frames):
        out[f] = c0 + weights @ disp[:, f, :]
    return ControlTrajectory(out)
