"""Minimal TrueType parser: quadratic glyph outlines, advances, char mapping.

Reads the `glyf`, `loca`, `cmap`, `hmtx` (plus `head`, `maxp`, `hhea`)
tables of a TrueType font. Composite glyphs are flattened to simple
contours at parse time. Coordinates are font units, y-up.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

REQUIRED_TABLES = ("head", "maxp", "cmap", "loca", "glyf", "hmtx", "hhea")

ON_CURVE = 0x01
X_SHORT = 0x02
Y_SHORT = 0x04
REPEAT = 0x08
X_SAME_OR_POS = 0x10
Y_SAME_OR_POS = 0x20

# composite component flags
ARG_1_AND_2_ARE_WORDS = 0x0001
ARGS_ARE_XY_VALUES = 0x0002
WE_HAVE_A_SCALE = 0x0008
MORE_COMPONENTS = 0x0020
WE_HAVE_AN_X_AND_Y_SCALE = 0x0040
WE_HAVE_A_TWO_BY_TWO = 0x0080

MAX_COMPONENT_DEPTH = 8


class FontParseError(ValueError):
    """Malformed TrueType data; `table` names the offending table."""

    def __init__(self, table: str, message: str):
        super().__init__(f"{table}: {message}")
        self.table = table


@dataclass
class GlyphContour:
    """One closed contour: point coordinates plus per-point on-curve flags.

    TrueType implicit midpoints may still be present (consecutive
    off-curve points); layout makes them explicit.
    """

    points: np.ndarray  # (n, 2) float64
    on_curve: np.ndarray  # (n,) bool
    closed: bool = True

    def copy(self) -> "GlyphContour":
        return GlyphContour(self.points.copy(), self.on_curve.copy(), self.closed)


@dataclass
class Glyph:
    contours: list[GlyphContour]
    advance: float
    name: str = ""


@dataclass
class _Tables:
    data: bytes
    offsets: dict = field(default_factory=dict)  # tag -> (offset, length)


class FontHandle:
    """Parsed font. Immutable after construction; safe for concurrent reads.

    Glyph outlines are parsed lazily and cached; the cache fill is
    idempotent so unlocked concurrent lookups are harmless.
    """

    def __init__(self, data: bytes):
        self._t = _parse_table_directory(data)
        self.units_per_em, self._loca_long = _parse_head(self._t)
        self.num_glyphs = _parse_maxp(self._t)
        self._loca = _parse_loca(self._t, self.num_glyphs, self._loca_long)
        self._cmap = _parse_cmap(self._t)
        self._hmtx = _parse_hmtx(self._t, self.num_glyphs)
        self._glyf_off, self._glyf_len = self._t.offsets["glyf"]
        self._cache: dict[int, Glyph] = {}

    def glyph_index(self, codepoint: int) -> int:
        """Glyph id for a Unicode code point; 0 (.notdef) when unmapped."""
        return self._cmap.get(codepoint, 0)

    def glyph_for_char(self, char: str) -> Glyph:
        gid = self.glyph_index(ord(char))
        if gid == 0 and ord(char) not in self._cmap:
            warnings.warn(f"no glyph for {char!r}; falling back to .notdef")
        return self.glyph(gid)

    def glyph(self, gid: int) -> Glyph:
        cached = self._cache.get(gid)
        if cached is None:
            cached = self._load_glyph(gid, depth=0)
            self._cache[gid] = cached
        return cached

    def advance(self, gid: int) -> float:
        aw = self._hmtx
        return float(aw[gid] if gid < len(aw) else aw[-1])

    # -- glyph outline parsing --------------------------------------------

    def _glyph_bytes(self, gid: int) -> bytes:
        if gid >= self.num_glyphs:
            raise FontParseError("glyf", f"glyph id {gid} out of range")
        start, end = self._loca[gid], self._loca[gid + 1]
        if end < start or end > self._glyf_len:
            raise FontParseError("loca", f"bad offsets for glyph {gid}")
        base = self._glyf_off
        return self._t.data[base + start : base + end]

    def _load_glyph(self, gid: int, depth: int) -> Glyph:
        raw = self._glyph_bytes(gid)
        if not raw:  # empty outline (space)
            return Glyph([], self.advance(gid))
        if len(raw) < 10:
            raise FontParseError("glyf", f"glyph {gid}: header truncated")
        (n_contours,) = struct.unpack_from(">h", raw, 0)
        if n_contours >= 0:
            contours = _parse_simple_glyph(raw, n_contours, gid)
        else:
            contours = self._parse_composite(raw, gid, depth)
        return Glyph(contours, self.advance(gid))

    def _parse_composite(self, raw: bytes, gid: int, depth: int) -> list[GlyphContour]:
        if depth >= MAX_COMPONENT_DEPTH:
            raise FontParseError("glyf", f"glyph {gid}: component nesting too deep")
        contours: list[GlyphContour] = []
        pos = 10
        more = True
        while more:
            try:
                flags, comp_gid = struct.unpack_from(">HH", raw, pos)
            except struct.error as exc:
                raise FontParseError("glyf", f"glyph {gid}: composite truncated") from exc
            pos += 4
            if flags & ARG_1_AND_2_ARE_WORDS:
                arg1, arg2 = struct.unpack_from(">hh", raw, pos)
                pos += 4
            else:
                arg1, arg2 = struct.unpack_from(">bb", raw, pos)
                pos += 2
            xx, xy, yx, yy = 1.0, 0.0, 0.0, 1.0
            if flags & WE_HAVE_A_SCALE:
                xx = yy = _f2dot14(raw, pos, gid)
                pos += 2
            elif flags & WE_HAVE_AN_X_AND_Y_SCALE:
                xx = _f2dot14(raw, pos, gid)
                yy = _f2dot14(raw, pos + 2, gid)
                pos += 4
            elif flags & WE_HAVE_A_TWO_BY_TWO:
                xx = _f2dot14(raw, pos, gid)
                xy = _f2dot14(raw, pos + 2, gid)
                yx = _f2dot14(raw, pos + 4, gid)
                yy = _f2dot14(raw, pos + 6, gid)
                pos += 8
            if not flags & ARGS_ARE_XY_VALUES:
                raise FontParseError("glyf", f"glyph {gid}: point-matching components unsupported")
            child = self._load_glyph(comp_gid, depth + 1)
            for c in child.contours:
                pts = c.points
                out = np.empty_like(pts)
                out[:, 0] = xx * pts[:, 0] + yx * pts[:, 1] + arg1
                out[:, 1] = xy * pts[:, 0] + yy * pts[:, 1] + arg2
                contours.append(GlyphContour(out, c.on_curve.copy()))
            more = bool(flags & MORE_COMPONENTS)
        return contours


def parse_font(font_bytes: bytes) -> FontHandle:
    """Parse a TrueType font from raw bytes."""
    return FontHandle(font_bytes)


def load_font(path) -> FontHandle:
    with open(path, "rb") as fh:
        return parse_font(fh.read())


# -- table parsing ---------------------------------------------------------


def _parse_table_directory(data: bytes) -> _Tables:
    if len(data) < 12:
        raise FontParseError("sfnt", "file too short")
    (version, num_tables) = struct.unpack_from(">IH", data, 0)
    if version not in (0x00010000, 0x74727565):  # 1.0 or 'true'
        raise FontParseError("sfnt", f"not a TrueType font (version 0x{version:08x})")
    tables = _Tables(data)
    pos = 12
    for _ in range(num_tables):
        if pos + 16 > len(data):
            raise FontParseError("sfnt", "table directory truncated")
        tag, _chk, off, length = struct.unpack_from(">4sIII", data, pos)
        pos += 16
        if off + length > len(data):
            raise FontParseError(tag.decode("latin1"), "table extends past end of file")
        tables.offsets[tag.decode("latin1")] = (off, length)
    for name in REQUIRED_TABLES:
        if name not in tables.offsets:
            raise FontParseError(name, "required table missing")
    return tables


def _table(t: _Tables, name: str) -> bytes:
    off, length = t.offsets[name]
    return t.data[off : off + length]


def _parse_head(t: _Tables) -> tuple[int, bool]:
    head = _table(t, "head")
    if len(head) < 54:
        raise FontParseError("head", "truncated")
    (units_per_em,) = struct.unpack_from(">H", head, 18)
    (loc_fmt,) = struct.unpack_from(">h", head, 50)
    if units_per_em == 0:
        raise FontParseError("head", "unitsPerEm is zero")
    return units_per_em, loc_fmt == 1


def _parse_maxp(t: _Tables) -> int:
    maxp = _table(t, "maxp")
    if len(maxp) < 6:
        raise FontParseError("maxp", "truncated")
    (n,) = struct.unpack_from(">H", maxp, 4)
    return n


def _parse_loca(t: _Tables, num_glyphs: int, long_fmt: bool) -> np.ndarray:
    loca = _table(t, "loca")
    count = num_glyphs + 1
    if long_fmt:
        if len(loca) < 4 * count:
            raise FontParseError("loca", "truncated")
        arr = np.frombuffer(loca[: 4 * count], dtype=">u4").astype(np.int64)
    else:
        if len(loca) < 2 * count:
            raise FontParseError("loca", "truncated")
        arr = np.frombuffer(loca[: 2 * count], dtype=">u2").astype(np.int64) * 2
    if np.any(np.diff(arr) < 0):
        raise FontParseError("loca", "offsets not monotonic")
    return arr


def _parse_hmtx(t: _Tables, num_glyphs: int) -> np.ndarray:
    hhea = _table(t, "hhea")
    if len(hhea) < 36:
        raise FontParseError("hhea", "truncated")
    (n_metrics,) = struct.unpack_from(">H", hhea, 34)
    if n_metrics == 0:
        raise FontParseError("hhea", "numberOfHMetrics is zero")
    hmtx = _table(t, "hmtx")
    if len(hmtx) < 4 * n_metrics:
        raise FontParseError("hmtx", "truncated")
    pairs = np.frombuffer(hmtx[: 4 * n_metrics], dtype=">u2").reshape(-1, 2)
    return pairs[:, 0].astype(np.float64)


def _parse_cmap(t: _Tables) -> dict[int, int]:
    cmap = _table(t, "cmap")
    if len(cmap) < 4:
        raise FontParseError("cmap", "truncated")
    (_ver, n_sub) = struct.unpack_from(">HH", cmap, 0)
    best = None  # (priority, offset)
    for i in range(n_sub):
        pos = 4 + 8 * i
        if pos + 8 > len(cmap):
            raise FontParseError("cmap", "subtable records truncated")
        plat, enc, off = struct.unpack_from(">HHI", cmap, pos)
        pri = {(3, 10): 0, (0, 4): 1, (3, 1): 2, (0, 3): 3}.get((plat, enc))
        if pri is None and plat == 0:
            pri = 4
        if pri is not None and (best is None or pri < best[0]):
            best = (pri, off)
    if best is None:
        raise FontParseError("cmap", "no unicode subtable")
    off = best[1]
    if off + 2 > len(cmap):
        raise FontParseError("cmap", "subtable offset out of range")
    (fmt,) = struct.unpack_from(">H", cmap, off)
    if fmt == 4:
        return _parse_cmap4(cmap, off)
    if fmt == 12:
        return _parse_cmap12(cmap, off)
    raise FontParseError("cmap", f"unsupported subtable format {fmt}")


def _parse_cmap4(cmap: bytes, off: int) -> dict[int, int]:
    try:
        (_fmt, length, _lang, seg_x2) = struct.unpack_from(">HHHH", cmap, off)
        seg = seg_x2 // 2
        p = off + 14
        ends = np.frombuffer(cmap[p : p + seg_x2], dtype=">u2")
        p += seg_x2 + 2  # skip reservedPad
        starts = np.frombuffer(cmap[p : p + seg_x2], dtype=">u2")
        p += seg_x2
        deltas = np.frombuffer(cmap[p : p + seg_x2], dtype=">i2")
        p += seg_x2
        range_off_pos = p
        range_offs = np.frombuffer(cmap[p : p + seg_x2], dtype=">u2")
    except ValueError as exc:
        raise FontParseError("cmap", "format 4 subtable truncated") from exc
    mapping: dict[int, int] = {}
    for i in range(seg):
        start, end = int(starts[i]), int(ends[i])
        if start == 0xFFFF:
            continue
        for code in range(start, end + 1):
            if range_offs[i] == 0:
                gid = (code + int(deltas[i])) & 0xFFFF
            else:
                idx = range_off_pos + 2 * i + int(range_offs[i]) + 2 * (code - start)
                if idx + 2 > len(cmap):
                    raise FontParseError("cmap", "glyph index out of subtable")
                (gid,) = struct.unpack_from(">H", cmap, idx)
                if gid != 0:
                    gid = (gid + int(deltas[i])) & 0xFFFF
            if gid != 0:
                mapping[code] = gid
    return mapping


def _parse_cmap12(cmap: bytes, off: int) -> dict[int, int]:
    try:
        (n_groups,) = struct.unpack_from(">I", cmap, off + 12)
        mapping: dict[int, int] = {}
        for g in range(n_groups):
            s, e, gid0 = struct.unpack_from(">III", cmap, off + 16 + 12 * g)
            for code in range(s, e + 1):
                mapping[code] = gid0 + (code - s)
        return mapping
    except struct.error as exc:
        raise FontParseError("cmap", "format 12 subtable truncated") from exc


def _f2dot14(raw: bytes, pos: int, gid: int) -> float:
    try:
        (v,) = struct.unpack_from(">h", raw, pos)
    except struct.error as exc:
        raise FontParseError("glyf", f"glyph {gid}: transform truncated") from exc
    return v / 16384.0


def _parse_simple_glyph(raw: bytes, n_contours: int, gid: int) -> list[GlyphContour]:
    def fail(msg: str):
        raise FontParseError("glyf", f"glyph {gid}: {msg}")

    if len(raw) < 10 + 2 * n_contours + 2:
        fail("contour ends truncated")
    ends = struct.unpack_from(f">{n_contours}H", raw, 10)
    if n_contours and list(ends) != sorted(ends):
        fail("contour end points not increasing")
    n_points = (ends[-1] + 1) if n_contours else 0
    pos = 10 + 2 * n_contours
    (instr_len,) = struct.unpack_from(">H", raw, pos)
    pos += 2 + instr_len

    flags = []
    while len(flags) < n_points:
        if pos >= len(raw):
            fail("flags truncated")
        f = raw[pos]
        pos += 1
        flags.append(f)
        if f & REPEAT:
            if pos >= len(raw):
                fail("flag repeat truncated")
            flags.extend([f] * raw[pos])
            pos += 1
    if len(flags) > n_points:
        fail("flag overrun")

    def read_deltas(short_bit: int, same_bit: int) -> list[int]:
        nonlocal pos
        vals = []
        v = 0
        for f in flags:
            if f & short_bit:
                if pos >= len(raw):
                    fail("coordinates truncated")
                d = raw[pos]
                pos += 1
                v += d if f & same_bit else -d
            elif not f & same_bit:
                if pos + 2 > len(raw):
                    fail("coordinates truncated")
                (d,) = struct.unpack_from(">h", raw, pos)
                pos += 2
                v += d
            vals.append(v)
        return vals

    xs = read_deltas(X_SHORT, X_SAME_OR_POS)
    ys = read_deltas(Y_SHORT, Y_SAME_OR_POS)

    contours = []
    start = 0
    for end in ends:
        pts = np.array(
            [[xs[i], ys[i]] for i in range(start, end + 1)], dtype=np.float64
        ).reshape(-1, 2)
        on = np.array([bool(flags[i] & ON_CURVE) for i in range(start, end + 1)], dtype=bool)
        contours.append(GlyphContour(pts, on))
        start = end + 1
    return contours
