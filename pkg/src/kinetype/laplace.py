"""Shape-preserving refinement of aligned control points.

The aligned positions follow the motion but can shear glyphs apart.
This module pulls each frame back toward the original local shape:
every control point keeps a Laplacian coordinate (its offset from an
inverse-square-weighted mean of its k nearest neighbors), and a
per-frame objective

    loss(C) = alpha * sum_j |lap_j(C) - lap_j(C^0)|^e   (shape term)
            +         sum_j |C_j - C'_j|^e              (motion term)

is minimized with gradient descent and backtracking line search, where
C' is the aligned frame. Neighbor indices come from the original
layout; the mixing weights of each frame are frozen at C', which keeps
lap(C) linear in C and the gradient exact.

The k-nearest-neighbor queries use a small kd-tree whose results are
bit-identical to a brute-force scan, ties resolved by lower index.
"""

from __future__ import annotations

import time
from bisect import insort
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .align import ControlTrajectory, DeformParams

DISTANCE_SQ_CLAMP = 1e-12  # squared-distance floor for mixing weights
NORM_SMOOTHING = 1e-12  # added under fractional powers so e < 2 stays smooth
MAX_ITERATIONS = 200
INITIAL_STEP = 0.1
RELATIVE_LOSS_TOL = 1e-6
MAX_HALVINGS = 40


class KDTree:
    """Static 2-d tree with deterministic queries.

    Candidates are ordered by (squared distance, index) and a branch is
    pruned only when its best possible squared distance strictly
    exceeds the current worst candidate, so query results match a
    brute-force scan exactly, ties included.
    """

    def __init__(self, points: np.ndarray):
        self._pts = np.ascontiguousarray(points, dtype=np.float64)
        if self._pts.ndim != 2 or self._pts.shape[1] != 2:
            raise ValueError("points must have shape (M, 2)")
        self._point_of: list[int] = []
        self._axis_of: list[int] = []
        self._left: list[int] = []
        self._right: list[int] = []
        self._root = self._build(np.arange(len(self._pts)))

    def _build(self, idx: np.ndarray) -> int:
        if len(idx) == 0:
            return -1
        sub = self._pts[idx]
        axis = int(np.argmax(sub.max(axis=0) - sub.min(axis=0)))
        order = idx[np.lexsort((idx, self._pts[idx, axis]))]
        mid = len(order) // 2
        node = len(self._point_of)
        self._point_of.append(int(order[mid]))
        self._axis_of.append(axis)
        self._left.append(-1)
        self._right.append(-1)
        self._left[node] = self._build(order[:mid])
        self._right[node] = self._build(order[mid + 1 :])
        return node

    def query(self, q, k: int, exclude: int = -1) -> list[int]:
        """Indices of the k nearest points to q, nearest first."""
        pts = self._pts
        qx, qy = float(q[0]), float(q[1])
        best: list[tuple[float, int]] = []

        def visit(node: int) -> None:
            if node < 0:
                return
            i = self._point_of[node]
            if i != exclude:
                dx = pts[i, 0] - qx
                dy = pts[i, 1] - qy
                cand = (dx * dx + dy * dy, i)
                if len(best) < k:
                    insort(best, cand)
                elif cand < best[-1]:
                    insort(best, cand)
                    best.pop()
            axis = self._axis_of[node]
            diff = (qx if axis == 0 else qy) - pts[i, axis]
            near, far = (
                (self._left[node], self._right[node])
                if diff < 0.0
                else (self._right[node], self._left[node])
            )
            visit(near)
            if len(best) < k or diff * diff <= best[-1][0]:
                visit(far)

        visit(self._root)
        return [i for _, i in best]


def build_neighbor_graph(points: np.ndarray, k: int = 3) -> np.ndarray:
    """(M, k) indices of each point's k nearest other points."""
    pts = np.asarray(points, dtype=np.float64)
    m = len(pts)
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if m <= k:
        raise ValueError(f"need more than {k} points to pick {k} neighbors, got {m}")
    tree = KDTree(pts)
    out = np.empty((m, k), dtype=np.intp)
    for j in range(m):
        out[j] = tree.query(pts[j], k, exclude=j)
    return out


def laplacian_weights(points: np.ndarray, neighbors: np.ndarray) -> np.ndarray:
    """(M, k) inverse-squared-distance mixing weights, rows summing to 1."""
    pts = np.asarray(points, dtype=np.float64)
    diff = pts[neighbors] - pts[:, None, :]
    d2 = np.maximum((diff * diff).sum(axis=2), DISTANCE_SQ_CLAMP)
    w = 1.0 / d2
    return w / w.sum(axis=1, keepdims=True)


def laplacian_coords(
    points: np.ndarray, neighbors: np.ndarray, weights: np.ndarray | None = None
) -> np.ndarray:
    """(M, 2) offsets from the weighted neighbor mean: lap = W C - C."""
    pts = np.asarray(points, dtype=np.float64)
    if weights is None:
        weights = laplacian_weights(pts, neighbors)
    return (weights[:, :, None] * pts[neighbors]).sum(axis=1) - pts


@dataclass
class FrameObjective:
    """Loss and gradient of one frame, with mixing weights frozen at C'."""

    c_prime: np.ndarray  # (M, 2) aligned positions
    rest_lap: np.ndarray  # (M, 2) Laplacian coordinates of the layout
    neighbors: np.ndarray  # (M, k)
    params: DeformParams
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        self.weights = laplacian_weights(self.c_prime, self.neighbors)

    def _lap(self, c: np.ndarray) -> np.ndarray:
        return (self.weights[:, :, None] * c[self.neighbors]).sum(axis=1) - c

    def loss(self, c: np.ndarray) -> float:
        e, alpha = self.params.e, self.params.alpha
        dg = self._lap(c) - self.rest_lap
        gsq = (dg * dg).sum(axis=1) + NORM_SMOOTHING
        dm = c - self.c_prime
        msq = (dm * dm).sum(axis=1) + NORM_SMOOTHING
        return float(alpha * (gsq ** (e / 2.0)).sum() + (msq ** (e / 2.0)).sum())

    def loss_grad(self, c: np.ndarray) -> tuple[float, np.ndarray]:
        e, alpha = self.params.e, self.params.alpha
        dg = self._lap(c) - self.rest_lap
        gsq = (dg * dg).sum(axis=1) + NORM_SMOOTHING
        dm = c - self.c_prime
        msq = (dm * dm).sum(axis=1) + NORM_SMOOTHING
        loss = float(alpha * (gsq ** (e / 2.0)).sum() + (msq ** (e / 2.0)).sum())

        # d|v|^e / dv = e (|v|^2 + s)^((e-2)/2) v, matching loss exactly
        gv = e * (gsq ** ((e - 2.0) / 2.0))[:, None] * dg  # dloss/dlap rows
        # lap = (W - I) c, so grad += alpha (W - I)^T gv
        grad = -alpha * gv
        np.add.at(
            grad,
            self.neighbors.ravel(),
            (alpha * self.weights[:, :, None] * gv[:, None, :]).reshape(-1, 2),
        )
        grad += e * (msq ** ((e - 2.0) / 2.0))[:, None] * dm
        return loss, grad

    def components(self, c: np.ndarray) -> tuple[float, float]:
        """(shape term, motion term) without the alpha factor."""
        e = self.params.e
        dg = self._lap(c) - self.rest_lap
        gsq = (dg * dg).sum(axis=1) + NORM_SMOOTHING
        dm = c - self.c_prime
        msq = (dm * dm).sum(axis=1) + NORM_SMOOTHING
        return float((gsq ** (e / 2.0)).sum()), float((msq ** (e / 2.0)).sum())


@dataclass
class OptimizeReport:
    """What one frame's descent did."""

    frame: int
    iterations: int
    loss_history: list[float]
    shape_loss: float
    motion_loss: float
    converged: bool
    duration_s: float

    @property
    def initial_loss(self) -> float:
        return self.loss_history[0]

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1]


def optimize_frame(
    c_prime: np.ndarray,
    rest_lap: np.ndarray,
    neighbors: np.ndarray,
    params: DeformParams,
    frame_index: int = 0,
) -> tuple[np.ndarray, OptimizeReport]:
    """Descend one frame's objective from the aligned positions.

    Backtracking halves the step until the loss strictly decreases, so
    the recorded loss history never increases. Stops on a zero
    gradient, a relative improvement below RELATIVE_LOSS_TOL, or
    MAX_ITERATIONS accepted steps.
    """
    t0 = time.perf_counter()
    obj = FrameObjective(np.asarray(c_prime, np.float64), rest_lap, neighbors, params)
    c = obj.c_prime.copy()
    loss, grad = obj.loss_grad(c)
    history = [loss]
    converged = False
    iterations = 0
    for _ in range(MAX_ITERATIONS):
        if not (grad * grad).sum() > 0.0:
            converged = True
            break
        step = INITIAL_STEP
        cand = None
        cand_loss = loss
        for _ in range(MAX_HALVINGS):
            trial = c - step * grad
            trial_loss = obj.loss(trial)
            if trial_loss < loss:
                cand, cand_loss = trial, trial_loss
                break
            step *= 0.5
        if cand is None:  # no decrease at any step: numerically optimal
            converged = True
            break
        iterations += 1
        rel = (loss - cand_loss) / loss if loss > 0 else 0.0
        c = cand
        loss, grad = obj.loss_grad(c)
        history.append(loss)
        if rel < RELATIVE_LOSS_TOL:
            converged = True
            break
    shape_loss, motion_loss = obj.components(c)
    report = OptimizeReport(
        frame=frame_index,
        iterations=iterations,
        loss_history=history,
        shape_loss=shape_loss,
        motion_loss=motion_loss,
        converged=converged,
        duration_s=time.perf_counter() - t0,
    )
    return c, report


def optimize_all(
    raw: ControlTrajectory,
    controls0: np.ndarray,
    params: DeformParams = DeformParams(),
    workers: int | None = None,
) -> tuple[ControlTrajectory, list[OptimizeReport]]:
    """Refine every frame of an aligned trajectory.

    Frame 1 is the layout itself and passes through untouched. Frames
    are independent, so `workers` > 1 refines them in parallel without
    changing the result.
    """
    c0 = np.asarray(controls0, dtype=np.float64)
    neighbors = build_neighbor_graph(c0, params.k)
    rest_lap = laplacian_coords(c0, neighbors)
    n_frames = raw.num_frames
    out = raw.positions.copy()

    first = FrameObjective(raw.positions[0], rest_lap, neighbors, params)
    f0_shape, f0_motion = first.components(raw.positions[0])
    reports: list[OptimizeReport] = [
        OptimizeReport(
            0, 0, [first.loss(raw.positions[0])], f0_shape, f0_motion, True, 0.0
        )
    ]

    def run(f: int) -> tuple[np.ndarray, OptimizeReport]:
        return optimize_frame(raw.positions[f], rest_lap, neighbors, params, f)

    frames = range(1, n_frames)
    if workers and workers > 1 and n_frames > 2:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, frames))
    else:
        results = [run(f) for f in frames]
    for f, (c, report) in zip(frames, results):
        out[f] = c
        reports.append(report)
    return ControlTrajectory(out), reports
