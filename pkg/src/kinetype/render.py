"""Rasterize control-point outlines back into pixels, plus SVG export.

Outlines are quadratic curve chains. Rasterization flattens them to
polylines (adaptive midpoint split, max deviation 0.25 px), fills with
the nonzero winding rule on a supersampled scanline grid, and boxes the
coverage down to 8-bit alpha. Computation is pure integer arithmetic
after the crossing positions, so output is identical across platforms.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .align import ControlTrajectory
from .gif import FrameSequence
from .layout import TextLayout

FLATTEN_TOLERANCE_PX = 0.25
SUPERSAMPLE_CHOICES = (1, 2, 4)
_MAX_SPLIT_DEPTH = 24

Color = tuple[int, int, int]
BLACK: Color = (0, 0, 0)
WHITE: Color = (255, 255, 255)


def _flatten_quad(p0, ctrl, p2, tol: float, out: list, depth: int = 0) -> None:
    mid_chord = (p0 + p2) * 0.5
    dev = ctrl - mid_chord
    if depth >= _MAX_SPLIT_DEPTH or (dev[0] ** 2 + dev[1] ** 2) * 0.25 <= tol * tol:
        out.append(p2)
        return
    lc = (p0 + ctrl) * 0.5
    rc = (ctrl + p2) * 0.5
    mid = (lc + rc) * 0.5
    _flatten_quad(p0, lc, mid, tol, out, depth + 1)
    _flatten_quad(mid, rc, p2, tol, out, depth + 1)


def flatten_contour(
    points: np.ndarray, on_curve: np.ndarray, tolerance: float = FLATTEN_TOLERANCE_PX
) -> np.ndarray:
    """Closed quadratic contour to polyline vertices (first point not repeated).

    `points` must be explicitized: no two adjacent off-curve points.
    Deviation from the true curve stays within `tolerance` (same units
    as the points).
    """
    pts = np.asarray(points, dtype=np.float64)
    on = np.asarray(on_curve, dtype=bool)
    n = len(pts)
    if n == 0:
        return pts.reshape(0, 2)
    if not on.any():  # degenerate: nothing to anchor a curve on
        return pts.copy()
    first = int(np.argmax(on))
    order = np.roll(np.arange(n), -first)
    pts = pts[order]
    on = on[order]

    out: list[np.ndarray] = [pts[0]]
    i = 0
    while i < n - 1:
        j = i + 1
        if on[j]:  # straight segment
            out.append(pts[j])
            i = j
        else:  # quadratic through the off-curve point, wrapping at the end
            _flatten_quad(pts[i], pts[j], pts[(j + 1) % n], tolerance, out)
            i = j + 1
    poly = np.array(out, dtype=np.float64)
    if len(poly) > 1 and np.array_equal(poly[0], poly[-1]):
        poly = poly[:-1]  # closing edge is implicit
    return poly


# -- scanline fill -----------------------------------------------------------


def _winding_counts(polylines: list[np.ndarray], rows: int, cols: int) -> np.ndarray:
    """(rows, cols) bool inside-mask of the union of closed polylines.

    Nonzero winding rule sampled at cell centers (c + 0.5, r + 0.5).
    Each edge deposits +-1 at the first sample column at or right of
    its crossing; a cumulative sum turns deltas into winding numbers.
    """
    delta = np.zeros((rows, cols + 1), dtype=np.int32)
    for poly in polylines:
        if len(poly) < 3:
            continue
        a = poly
        b = np.roll(poly, -1, axis=0)  # closing edge included
        for (x0, y0), (x1, y1) in zip(a, b):
            if y0 == y1:
                continue
            d = 1
            if y0 > y1:
                x0, y0, x1, y1 = x1, y1, x0, y0
                d = -1
            r0 = max(int(np.ceil(y0 - 0.5)), 0)
            r1 = min(int(np.ceil(y1 - 0.5)), rows)
            if r0 >= r1:
                continue
            rr = np.arange(r0, r1, dtype=np.float64)
            xs = x0 + (rr + 0.5 - y0) * ((x1 - x0) / (y1 - y0))
            cc = np.clip(np.ceil(xs - 0.5).astype(np.int64), 0, cols)
            np.add.at(delta, (np.arange(r0, r1), cc), d)
    return np.cumsum(delta, axis=1)[:, :cols] != 0


def _coverage(polylines: list[np.ndarray], width: int, height: int, ss: int) -> np.ndarray:
    """(H, W) alpha 0..255 from `ss` x `ss` supersampled binary coverage."""
    grid = [p * ss for p in polylines]
    inside = _winding_counts(grid, height * ss, width * ss)
    counts = inside.reshape(height, ss, width, ss).sum(axis=(1, 3)).astype(np.int64)
    return ((counts * 255 + (ss * ss) // 2) // (ss * ss)).astype(np.uint8)


def frame_polylines(
    layout: TextLayout, controls: np.ndarray, tolerance: float = FLATTEN_TOLERANCE_PX
) -> list[np.ndarray]:
    """Flattened outlines of every contour, in output pixel coordinates."""
    w, h = layout.canvas.width, layout.canvas.height
    scale = np.array([w, h], dtype=np.float64)
    polys = []
    for glyph in layout.glyphs:
        for c in glyph.contours:
            pts = controls[c.start : c.stop] * scale
            polys.append(flatten_contour(pts, c.on_curve, tolerance))
    return polys


def render_frame(
    layout: TextLayout,
    controls: np.ndarray | None = None,
    supersample: int = 4,
    fill: Color = BLACK,
    background: Color = WHITE,
) -> np.ndarray:
    """(H, W, 3) uint8 raster of the outlines at the given control positions.

    `controls` defaults to the layout rest pose and must match its
    shape. Compositing is integer-rounded, so equal inputs render
    byte-identically everywhere.
    """
    if supersample not in SUPERSAMPLE_CHOICES:
        raise ValueError(f"supersample must be one of {SUPERSAMPLE_CHOICES}")
    if controls is None:
        controls = layout.controls
    controls = np.asarray(controls, dtype=np.float64)
    if controls.shape != layout.controls.shape:
        raise ValueError(
            f"controls shape {controls.shape} does not match layout "
            f"{layout.controls.shape}"
        )
    w, h = layout.canvas.width, layout.canvas.height
    alpha = _coverage(frame_polylines(layout, controls), w, h, supersample)

    a = alpha.astype(np.uint32)[:, :, None]
    fg = np.array(fill, dtype=np.uint32)
    bg = np.array(background, dtype=np.uint32)
    return ((fg * a + bg * (255 - a) + 127) // 255).astype(np.uint8)


def render_sequence(
    layout: TextLayout,
    trajectory: ControlTrajectory,
    delays_cs: list[int],
    loop_count: int | None = 0,
    supersample: int = 4,
    fill: Color = BLACK,
    background: Color = WHITE,
) -> FrameSequence:
    """Render every frame of a control trajectory into a FrameSequence."""
    if trajectory.num_frames != len(delays_cs):
        raise ValueError(
            f"{trajectory.num_frames} frames but {len(delays_cs)} delays"
        )
    frames = np.stack(
        [
            render_frame(layout, trajectory.positions[f], supersample, fill, background)
            for f in range(trajectory.num_frames)
        ]
    )
    return FrameSequence(frames, list(delays_cs), loop_count)


# -- SVG export --------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.4f}".rstrip("0").rstrip(".")


def svg_path_data(layout: TextLayout, controls: np.ndarray) -> str:
    """SVG path `d` string of all contours, quadratics preserved."""
    w, h = layout.canvas.width, layout.canvas.height
    parts: list[str] = []
    for glyph in layout.glyphs:
        for c in glyph.contours:
            pts = controls[c.start : c.stop] * np.array([w, h], dtype=np.float64)
            on = c.on_curve
            n = len(pts)
            if n == 0:
                continue
            if not on.any():
                continue
            first = int(np.argmax(on))
            order = np.roll(np.arange(n), -first)
            pts = pts[order]
            on = on[order]
            parts.append(f"M {_fmt(pts[0, 0])} {_fmt(pts[0, 1])}")
            i = 0
            while i < n - 1:
                j = i + 1
                if on[j]:
                    parts.append(f"L {_fmt(pts[j, 0])} {_fmt(pts[j, 1])}")
                    i = j
                else:
                    e = pts[(j + 1) % n]
                    parts.append(
                        f"Q {_fmt(pts[j, 0])} {_fmt(pts[j, 1])} {_fmt(e[0])} {_fmt(e[1])}"
                    )
                    i = j + 1
            parts.append("Z")
    return " ".join(parts)


def export_svg(
    layout: TextLayout,
    controls: np.ndarray,
    fill: Color = BLACK,
    background: Color = WHITE,
) -> str:
    """One frame as a standalone SVG document string."""
    w, h = layout.canvas.width, layout.canvas.height
    fg = "#{:02x}{:02x}{:02x}".format(*fill)
    bg = "#{:02x}{:02x}{:02x}".format(*background)
    d = svg_path_data(layout, controls)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" '
        f'width="{w}" height="{h}">\n'
        f'  <rect width="{w}" height="{h}" fill="{bg}"/>\n'
        f'  <path d="{d}" fill="{fg}" fill-rule="nonzero"/>\n'
        f"</svg>\n"
    )


def export_svg_sequence(
    layout: TextLayout,
    trajectory: ControlTrajectory,
    delays_cs: list[int],
    out_dir,
    fill: Color = BLACK,
    background: Color = WHITE,
) -> list[str]:
    """Write frame_0001.svg ... plus manifest.json; returns file names."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for f in range(trajectory.num_frames):
        name = f"frame_{f + 1:04d}.svg"
        doc = export_svg(layout, trajectory.positions[f], fill, background)
        (out / name).write_text(doc)
        names.append(name)
    manifest = {"frames": names, "delays_cs": list(delays_cs)}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return names


# -- PNG (for previews) ------------------------------------------------------


def write_png(rgb: np.ndarray) -> bytes:
    """Encode an (H, W, 3) uint8 array as a PNG file (filter 0, one IDAT)."""
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise ValueError("expected an (H, W, 3) uint8 array")
    h, w = arr.shape[:2]

    def chunk(tag: bytes, payload: bytes) -> bytes:
        crc = zlib.crc32(tag + payload) & 0xFFFFFFFF
        return struct.pack(">I", len(payload)) + tag + payload + struct.pack(">I", crc)

    raw = np.concatenate(
        [np.zeros((h, 1), dtype=np.uint8), arr.reshape(h, w * 3)], axis=1
    ).tobytes()
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0))
        + chunk(b"IDAT", zlib.compress(raw, 6))
        + chunk(b"IEND", b"")
    )
