"""Curve flattening, winding-rule rasterization, SVG and PNG output tests."""

import hashlib
import io
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from kinetype.align import ControlTrajectory
from kinetype.render import (
    FLATTEN_TOLERANCE_PX,
    _coverage,
    _fmt,
    _winding_counts,
    export_svg,
    export_svg_sequence,
    flatten_contour,
    frame_polylines,
    render_frame,
    render_sequence,
    svg_path_data,
    write_png,
)

# sha256 of raster bytes, frozen from visually reviewed renders of the
# bundled font; any rendering change must be re-reviewed before updating
REST_SHA = "207028d7da2384fd7944a7645d4b889aedb31fdfcb65b4963f2fa2f2dcd60e97"
WARPED_SHA = "eadb26e24c735b6f8d21514cf175a9a74d66601cd6ac002803c45f0409b11789"


def quad_point(p0, ctrl, p2, t):
    return (1 - t) ** 2 * p0 + 2 * t * (1 - t) * ctrl + t**2 * p2


def dist_to_polyline(p, poly):
    best = np.inf
    for a, b in zip(poly[:-1], poly[1:]):
        ab = b - a
        denom = ab @ ab
        t = 0.0 if denom == 0 else np.clip((p - a) @ ab / denom, 0.0, 1.0)
        best = min(best, np.linalg.norm(p - (a + t * ab)))
    return best


def max_curve_deviation(points, on_curve, poly):
    """Largest distance from densely sampled true curves to the polyline."""
    closed_poly = np.vstack([poly, poly[:1]])
    worst = 0.0
    n = len(points)
    first = int(np.argmax(on_curve))
    order = np.roll(np.arange(n), -first)
    pts, on = points[order], on_curve[order]
    i = 0
    while i < n - 1:
        j = i + 1
        if on[j]:
            i = j
            continue
        p0, c, p2 = pts[i], pts[j], pts[(j + 1) % n]
        for t in np.linspace(0, 1, 64):
            worst = max(worst, dist_to_polyline(quad_point(p0, c, p2, t), closed_poly))
        i = j + 1
    return worst


# -- flattening ----------------------------------------------------------------


@pytest.mark.parametrize("tol", [0.25, 0.05])
def test_flatten_stays_within_tolerance(tol):
    rng = np.random.RandomState(0)
    for _ in range(20):
        pts = rng.rand(8, 2) * 100
        on = np.array([True, False] * 4)
        poly = flatten_contour(pts, on, tolerance=tol)
        assert max_curve_deviation(pts, on, poly) <= tol + 1e-9


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_flatten_tolerance_property(seed):
    rng = np.random.RandomState(seed)
    pts = rng.rand(6, 2) * 50
    on = np.array([True, False, True, True, False, True])
    poly = flatten_contour(pts, on)
    assert max_curve_deviation(pts, on, poly) <= FLATTEN_TOLERANCE_PX + 1e-9


def test_flatten_polygon_passthrough():
    # all on-curve points: the polyline is the polygon itself
    pts = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]])
    on = np.ones(4, dtype=bool)
    assert np.array_equal(flatten_contour(pts, on), pts)


def test_flatten_rotates_to_on_curve_start():
    pts = np.array([[5.0, 0.0], [10.0, 10.0], [0.0, 10.0]])
    on = np.array([False, True, True])
    poly = flatten_contour(pts, on)
    assert np.array_equal(poly[0], pts[1])


def test_flatten_empty_and_degenerate():
    assert flatten_contour(np.zeros((0, 2)), np.zeros(0, dtype=bool)).shape == (0, 2)
    pts = np.array([[1.0, 2.0], [3.0, 4.0]])
    off = np.zeros(2, dtype=bool)
    assert np.array_equal(flatten_contour(pts, off), pts)


def test_flatten_no_duplicate_closing_vertex():
    rng = np.random.RandomState(3)
    pts = rng.rand(8, 2) * 40
    on = np.array([True, False] * 4)
    poly = flatten_contour(pts, on)
    assert not np.array_equal(poly[0], poly[-1])


# -- winding fill --------------------------------------------------------------


def winding_number(p, poly):
    """Textbook winding number at p, half-open in y, strict in x."""
    wn = 0
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if a[1] <= p[1]:
            if b[1] > p[1] and cross > 0:
                wn += 1
        elif b[1] <= p[1] and cross < 0:
            wn -= 1
    return wn


def oracle_coverage(polys, width, height, ss):
    """Brute-force winding at every subsample center, boxed to alpha."""
    counts = np.zeros((height, width), dtype=np.int64)
    for r in range(height * ss):
        for c in range(width * ss):
            p = np.array([(c + 0.5) / ss, (r + 0.5) / ss])
            # contours share one winding accumulator, like a single SVG path
            if sum(winding_number(p, poly) for poly in polys) != 0:
                counts[r // ss, c // ss] += 1
    return ((counts * 255 + (ss * ss) // 2) // (ss * ss)).astype(np.uint8)


def test_rectangle_exact_coverage():
    rect = np.array([[2.0, 3.0], [10.0, 3.0], [10.0, 8.0], [2.0, 8.0]])
    for ss in (1, 2, 4):
        alpha = _coverage([rect], 16, 12, ss)
        expect = np.zeros((12, 16), dtype=np.uint8)
        expect[3:8, 2:10] = 255
        assert np.array_equal(alpha, expect)


def test_half_covered_pixel_alpha():
    rect = np.array([[2.0, 3.0], [10.5, 3.0], [10.5, 8.0], [2.0, 8.0]])
    alpha = _coverage([rect], 16, 12, 2)
    assert alpha[5, 5] == 255
    assert alpha[5, 10] == 128
    assert alpha[5, 11] == 0


def test_winding_orientation_makes_holes():
    outer = np.array([[2.0, 2.0], [12.0, 2.0], [12.0, 12.0], [2.0, 12.0]])
    inner = np.array([[5.0, 5.0], [9.0, 5.0], [9.0, 9.0], [5.0, 9.0]])
    filled = _winding_counts([outer, inner], 14, 14)  # same orientation
    assert filled[7, 7]
    punched = _winding_counts([outer, inner[::-1]], 14, 14)  # reversed inner
    assert not punched[7, 7]
    assert punched[3, 7]  # ring still filled


def test_coverage_matches_brute_force_oracle():
    rng = np.random.RandomState(1)
    for ss in (1, 2, 4):
        for _ in range(4):
            polys = [rng.rand(5, 2) * np.array([16, 12]) for _ in range(2)]
            assert np.array_equal(
                _coverage(polys, 16, 12, ss), oracle_coverage(polys, 16, 12, ss)
            )


def test_tiny_polylines_ignored():
    seg = np.array([[1.0, 1.0], [5.0, 5.0]])
    assert not _winding_counts([seg], 8, 8).any()


# -- frame rendering -----------------------------------------------------------


def test_render_frame_rest_pose_golden(sleepy_layout):
    img = render_frame(sleepy_layout)
    assert img.shape == (256, 256, 3)
    assert hashlib.sha256(img.tobytes()).hexdigest() == REST_SHA


def test_render_frame_warped_golden(sleepy_layout):
    c = sleepy_layout.controls
    warped = c + 0.02 * np.stack(
        [np.sin(6.0 * c[:, 1]), np.cos(5.0 * c[:, 0])], axis=1
    )
    img = render_frame(sleepy_layout, warped)
    assert hashlib.sha256(img.tobytes()).hexdigest() == WARPED_SHA


def test_render_frame_deterministic(sleepy_layout):
    a = render_frame(sleepy_layout)
    b = render_frame(sleepy_layout)
    assert np.array_equal(a, b)


def test_render_frame_colors(sleepy_layout):
    fill, bg = (200, 30, 30), (10, 10, 60)
    img = render_frame(sleepy_layout, fill=fill, background=bg)
    assert tuple(img[0, 0]) == bg
    assert np.any(np.all(img == fill, axis=-1))


def test_render_frame_validation(sleepy_layout):
    with pytest.raises(ValueError, match="supersample"):
        render_frame(sleepy_layout, supersample=3)
    with pytest.raises(ValueError, match="shape"):
        render_frame(sleepy_layout, controls=np.zeros((4, 2)))


def test_supersampling_smooths_edges(sleepy_layout):
    img1 = render_frame(sleepy_layout, supersample=1)
    img4 = render_frame(sleepy_layout, supersample=4)
    grays1 = np.unique(img1[:, :, 0])
    grays4 = np.unique(img4[:, :, 0])
    assert len(grays1) == 2  # hard on/off
    assert len(grays4) > 4  # intermediate coverage levels appear


def test_frame_polylines_in_pixel_coords(sleepy_layout):
    polys = frame_polylines(sleepy_layout, sleepy_layout.controls)
    assert len(polys) == sum(len(g.contours) for g in sleepy_layout.glyphs)
    allpts = np.vstack(polys)
    assert allpts.min() >= 0
    assert allpts[:, 0].max() <= 256
    assert allpts[:, 1].max() <= 256


def test_render_sequence(sleepy_layout):
    c = sleepy_layout.controls
    traj = ControlTrajectory(np.stack([c, c + 0.01]))
    seq = render_sequence(sleepy_layout, traj, [4, 6], loop_count=2)
    assert seq.num_frames == 2
    assert seq.delays_cs == [4, 6]
    assert seq.loop_count == 2
    assert np.array_equal(seq.frames[0], render_frame(sleepy_layout))
    with pytest.raises(ValueError, match="delays"):
        render_sequence(sleepy_layout, traj, [4])


# -- SVG -----------------------------------------------------------------------


def test_fmt_trims_zeros():
    assert _fmt(2.0) == "2"
    assert _fmt(0.5) == "0.5"
    assert _fmt(3.14159) == "3.1416"
    assert _fmt(0.125) == "0.125"


def test_svg_document_structure(sleepy_layout):
    doc = export_svg(sleepy_layout, sleepy_layout.controls)
    root = ET.fromstring(doc)
    assert root.tag.endswith("svg")
    assert root.get("viewBox") == "0 0 256 256"
    tags = [child.tag.split("}")[-1] for child in root]
    assert tags == ["rect", "path"]
    d = root[1].get("d")
    assert d.startswith("M ")
    assert d.endswith(" Z")
    assert root[1].get("fill-rule") == "nonzero"


def test_svg_path_has_quadratics(sleepy_layout):
    d = svg_path_data(sleepy_layout, sleepy_layout.controls)
    assert " Q " in d
    assert d.count("M ") == sum(len(g.contours) for g in sleepy_layout.glyphs)
    assert d.count("Z") == d.count("M ")


def test_export_svg_sequence(sleepy_layout, tmp_path):
    c = sleepy_layout.controls
    traj = ControlTrajectory(np.stack([c, c, c]))
    names = export_svg_sequence(sleepy_layout, traj, [5, 5, 5], tmp_path)
    assert names == ["frame_0001.svg", "frame_0002.svg", "frame_0003.svg"]
    for name in names:
        ET.fromstring((tmp_path / name).read_text())
    import json

    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest == {"frames": names, "delays_cs": [5, 5, 5]}


# -- PNG -----------------------------------------------------------------------


def test_write_png_round_trips_exactly():
    rng = np.random.RandomState(5)
    rgb = rng.randint(0, 256, size=(20, 31, 3), dtype=np.uint8)
    decoded = np.asarray(Image.open(io.BytesIO(write_png(rgb))).convert("RGB"))
    assert np.array_equal(decoded, rgb)


def test_write_png_validation():
    with pytest.raises(ValueError, match="uint8"):
        write_png(np.zeros((4, 4, 3), dtype=np.float64))
    with pytest.raises(ValueError, match="uint8"):
        write_png(np.zeros((4, 4), dtype=np.uint8))
