"""Word-anchor animation: every word follows one point.

Words are placed on a deterministic spiral, densest first word in the
middle. Each word gets a single anchor at its bounding-box center; the
anchors follow the keypoint motion through the usual distance-weighted
interpolation, and every word translates rigidly with its anchor. No
shape refinement runs in this mode because words never deform.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .align import ControlTrajectory, interpolation_weights
from .layout import CanvasSpec, ContourSlice, GlyphControlSet, TextLayout, explicitize
from .tracking import KeypointTrajectorySet
from .truetype import FontHandle, GlyphContour

SPIRAL_STEP = 0.35  # radians per probe
SPIRAL_GROWTH = 0.6  # px radius gained per radian
WORD_PAD_PX = 3.0
MAX_SHRINKS = 8


@dataclass
class WordCloudLayout:
    """Merged layout of all placed words plus per-word structure."""

    layout: TextLayout
    words: list[str]
    word_slices: list[tuple[int, int]]  # control ranges per word
    anchors: np.ndarray  # (num_words, 2) normalized word centers


def _word_outline(word: str, font: FontHandle) -> list[GlyphContour]:
    """Explicitized contours of one word in font units, pen at x=0."""
    contours: list[GlyphContour] = []
    pen = 0.0
    for ch in word:
        glyph = font.glyph_for_char(ch)
        for c in glyph.contours:
            e = explicitize(c)
            e.points[:, 0] += pen
            contours.append(e)
        pen += glyph.advance
    return contours


def _try_place(
    sizes_px: np.ndarray, canvas: CanvasSpec, margin: float
) -> np.ndarray | None:
    """Spiral-place word boxes; None when one does not fit the margin box.

    Returns (num_words, 2) box centers in pixels. Probes an Archimedean
    spiral from the canvas center and takes the first position where
    the padded box overlaps nothing already placed.
    """
    w, h = canvas.width, canvas.height
    lo = np.array([margin * w, margin * h])
    hi = np.array([(1.0 - margin) * w, (1.0 - margin) * h])
    center = np.array([w / 2.0, h / 2.0])
    placed: list[tuple[np.ndarray, np.ndarray]] = []  # (min, max) padded
    out = np.empty((len(sizes_px), 2), dtype=np.float64)
    max_radius = float(np.hypot(w, h))
    for k, size in enumerate(sizes_px):
        half = size / 2.0 + WORD_PAD_PX
        t = 0.0
        placed_at = None
        while True:
            r = SPIRAL_GROWTH * t
            cand = center + np.array([r * np.cos(t), r * np.sin(t)])
            if r > max_radius:
                break
            t += SPIRAL_STEP
            if (cand - half < lo).any() or (cand + half > hi).any():
                continue
            ok = all(
                (cand + half <= pmin).any() or (cand - half >= pmax).any()
                for pmin, pmax in placed
            )
            if ok:
                placed_at = cand
                break
        if placed_at is None:
            return None
        placed.append((placed_at - half, placed_at + half))
        out[k] = placed_at
    return out


def layout_word_cloud(
    text: str,
    font: FontHandle,
    canvas: CanvasSpec = CanvasSpec(),
    margin: float = 0.1,
) -> WordCloudLayout:
    """Place each whitespace-separated word of `text` on the canvas."""
    words = text.split()
    if not words:
        raise ValueError(f"text {text!r} contains no words")
    outlines = [_word_outline(wd, font) for wd in words]
    empty = [wd for wd, cs in zip(words, outlines) if not cs]
    if empty:
        raise ValueError(f"word {empty[0]!r} produced no drawable outline")

    boxes_fu = []  # (lo, hi) per word in font units
    for cs in outlines:
        pts = np.concatenate([c.points for c in cs], axis=0)
        boxes_fu.append((pts.min(axis=0), pts.max(axis=0)))
    sizes_fu = np.array([hi - lo for lo, hi in boxes_fu])

    # uniform scale: start from an area budget, shrink until the spiral fits
    w, h = canvas.width, canvas.height
    usable = (w * (1 - 2 * margin)) * (h * (1 - 2 * margin))
    word_area = float((sizes_fu[:, 0] * sizes_fu[:, 1]).sum())
    scale = float(np.sqrt(0.4 * usable / word_area)) if word_area > 0 else 1.0
    widest = float(sizes_fu[:, 0].max())
    if widest * scale > w * (1 - 2 * margin):
        scale = w * (1 - 2 * margin) / widest

    centers_px = None
    for _ in range(MAX_SHRINKS):
        centers_px = _try_place(sizes_fu * scale, canvas, margin)
        if centers_px is not None:
            break
        scale *= 0.8
    if centers_px is None:
        raise ValueError(f"could not place {len(words)} words on the canvas")

    glyph_sets: list[GlyphControlSet] = []
    chunks: list[np.ndarray] = []
    word_slices: list[tuple[int, int]] = []
    cursor = 0
    for wd, contours, (lo, hi), cpx in zip(words, outlines, boxes_fu, centers_px):
        mid_fu = (lo + hi) / 2.0
        start = cursor
        gset = GlyphControlSet(char=wd, start=cursor, stop=cursor)
        for c in contours:
            px = (c.points[:, 0] - mid_fu[0]) * scale + cpx[0]
            py = cpx[1] - (c.points[:, 1] - mid_fu[1]) * scale  # y-flip
            norm = np.column_stack([px / w, py / h])
            gset.contours.append(ContourSlice(cursor, cursor + len(norm), c.on_curve.copy()))
            chunks.append(norm)
            cursor += len(norm)
        gset.stop = cursor
        glyph_sets.append(gset)
        word_slices.append((start, cursor))

    layout = TextLayout(
        text=text,
        canvas=canvas,
        margin=margin,
        controls=np.concatenate(chunks, axis=0),
        glyphs=glyph_sets,
        scale_px=scale,
    )
    anchors = centers_px / np.array([w, h], dtype=np.float64)
    return WordCloudLayout(layout, words, word_slices, anchors)


def animate_word_cloud(
    cloud: WordCloudLayout,
    keypoints: KeypointTrajectorySet,
    e: float = 2.0,
) -> ControlTrajectory:
    """Rigidly translate each word along its anchor's interpolated motion."""
    weights = interpolation_weights(cloud.anchors, keypoints.positions[:, 0, :], e)
    disp = keypoints.displacements()  # (N, F, 2)
    n_frames = keypoints.num_frames
    c0 = cloud.layout.controls
    out = np.empty((n_frames, len(c0), 2), dtype=np.float64)
    worst = 0.0
    for f in range(n_frames):
        shift = weights @ disp[:, f, :]  # (num_words, 2)
        out[f] = c0
        for k, (a, b) in enumerate(cloud.word_slices):
            out[f, a:b] += shift[k]
        worst = max(worst, float(np.abs(shift).max(initial=0.0)))
    if worst > 0.5:
        warnings.warn(
            f"largest word shift is {worst:.2f} of the canvas; "
            f"words may leave the visible area"
        )
    return ControlTrajectory(out)
