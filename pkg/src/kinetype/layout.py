"""Text layout: glyph outlines to control points on a normalized canvas.

Control points live in [0, 1] x [0, 1] with y growing downward (image
convention). Font units are y-up, so layout flips. Scale is uniform in
pixels: the text block is fit inside the margin box and centered.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .truetype import FontHandle, GlyphContour

MIN_CONTROLS_PER_GLYPH = 5  # below this, deformation has too few handles


@dataclass(frozen=True)
class CanvasSpec:
    width: int = 256
    height: int = 256

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("canvas dimensions must be positive")


@dataclass
class ContourSlice:
    """One contour's span [start, stop) in the flat control array."""

    start: int
    stop: int
    on_curve: np.ndarray  # (stop - start,) bool


@dataclass
class GlyphControlSet:
    """Control points of one drawable glyph instance."""

    char: str
    start: int  # first control index owned by this glyph
    stop: int  # one past the last
    contours: list[ContourSlice] = field(default_factory=list)


@dataclass
class TextLayout:
    """Initial control configuration C^0 for a piece of text."""

    text: str
    canvas: CanvasSpec
    margin: float
    controls: np.ndarray  # (M, 2) float64, normalized y-down
    glyphs: list[GlyphControlSet]
    scale_px: float  # pixels per font unit actually used

    @property
    def num_controls(self) -> int:
        return int(self.controls.shape[0])

    def point_glyph(self) -> np.ndarray:
        """(M,) int array: owning glyph index of each control point."""
        out = np.empty(self.num_controls, dtype=np.intp)
        for gi, g in enumerate(self.glyphs):
            out[g.start : g.stop] = gi
        return out

    def to_json(self) -> str:
        doc = {
            "version": 1,
            "text": self.text,
            "canvas": {"width": self.canvas.width, "height": self.canvas.height},
            "margin": self.margin,
            "scale_px": self.scale_px,
            "controls": self.controls.tolist(),
            "glyphs": [
                {
                    "char": g.char,
                    "start": g.start,
                    "stop": g.stop,
                    "contours": [
                        {
                            "start": c.start,
                            "stop": c.stop,
                            "on_curve": c.on_curve.astype(int).tolist(),
                        }
                        for c in g.contours
                    ],
                }
                for g in self.glyphs
            ],
        }
        return json.dumps(doc, indent=2)

    @staticmethod
    def from_json(text: str) -> "TextLayout":
        doc = json.loads(text)
        if doc.get("version") != 1:
            raise ValueError(f"unsupported layout version {doc.get('version')!r}")
        glyphs = [
            GlyphControlSet(
                char=g["char"],
                start=g["start"],
                stop=g["stop"],
                contours=[
                    ContourSlice(c["start"], c["stop"], np.asarray(c["on_curve"], bool))
                    for c in g["contours"]
                ],
            )
            for g in doc["glyphs"]
        ]
        return TextLayout(
            text=doc["text"],
            canvas=CanvasSpec(**doc["canvas"]),
            margin=doc["margin"],
            controls=np.asarray(doc["controls"], dtype=np.float64).reshape(-1, 2),
            glyphs=glyphs,
            scale_px=doc["scale_px"],
        )


def explicitize(contour: GlyphContour) -> GlyphContour:
    """Insert the implied on-curve midpoint between adjacent off-curve points.

    After this every off-curve point sits between two on-curve ones, so
    the contour is a plain chain of quadratic segments.
    """
    pts, on = contour.points, contour.on_curve
    n = len(pts)
    if n == 0:
        return contour.copy()
    out_pts: list[np.ndarray] = []
    out_on: list[bool] = []
    for i in range(n):
        out_pts.append(pts[i])
        out_on.append(bool(on[i]))
        j = (i + 1) % n
        if not on[i] and not on[j]:
            out_pts.append((pts[i] + pts[j]) / 2.0)
            out_on.append(True)
    return GlyphContour(np.array(out_pts, dtype=np.float64), np.array(out_on, dtype=bool))


def layout_text(
    text: str,
    font: FontHandle,
    canvas: CanvasSpec = CanvasSpec(),
    margin: float = 0.1,
) -> TextLayout:
    """Place `text` on the canvas and return its control configuration.

    Raises ValueError when no drawable outline results (empty string,
    whitespace only) or when the margin leaves no room.
    """
    if not 0.0 <= margin < 0.5:
        raise ValueError(f"margin must be in [0, 0.5), got {margin}")

    # pen pass: place explicitized contours in font units
    placed: list[tuple[str, list[GlyphContour]]] = []
    pen_x = 0.0
    for char in text:
        glyph = font.glyph_for_char(char)
        contours = []
        for c in glyph.contours:
            e = explicitize(c)
            e.points[:, 0] += pen_x
            contours.append(e)
        if contours:
            placed.append((char, contours))
        pen_x += glyph.advance

    if not placed:
        raise ValueError(f"text {text!r} produced no drawable outline")

    all_pts = np.concatenate([c.points for _, cs in placed for c in cs], axis=0)
    lo = all_pts.min(axis=0)
    hi = all_pts.max(axis=0)
    bw, bh = hi - lo
    W, H = canvas.width, canvas.height
    avail_w = W * (1.0 - 2.0 * margin)
    avail_h = H * (1.0 - 2.0 * margin)
    scale = min(
        avail_w / bw if bw > 0 else np.inf,
        avail_h / bh if bh > 0 else np.inf,
    )
    if not np.isfinite(scale):  # degenerate: all points coincide
        scale = 1.0
    cx, cy = (lo + hi) / 2.0

    glyphs: list[GlyphControlSet] = []
    chunks: list[np.ndarray] = []
    cursor = 0
    for char, contours in placed:
        gset = GlyphControlSet(char=char, start=cursor, stop=cursor)
        for c in contours:
            px = (c.points[:, 0] - cx) * scale + W / 2.0
            py = H / 2.0 - (c.points[:, 1] - cy) * scale  # font y-up to image y-down
            norm = np.column_stack([px / W, py / H])
            n = len(norm)
            gset.contours.append(ContourSlice(cursor, cursor + n, c.on_curve.copy()))
            chunks.append(norm)
            cursor += n
        gset.stop = cursor
        n_glyph = gset.stop - gset.start
        if n_glyph < MIN_CONTROLS_PER_GLYPH:
            warnings.warn(
                f"glyph {char!r} has only {n_glyph} control points; "
                f"deformation may be under-constrained"
            )
        glyphs.append(gset)

    controls = np.concatenate(chunks, axis=0)
    return TextLayout(
        text=text,
        canvas=canvas,
        margin=margin,
        controls=controls,
        glyphs=glyphs,
        scale_px=float(scale),
    )
