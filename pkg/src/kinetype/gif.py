"""GIF87a/89a codec: decode to RGB frame stacks, encode deterministically.

Decoding composites frames the way a viewer would (disposal methods,
transparency, interlace) and returns full RGB frames. Encoding writes a
single global color table; when the sequence holds at most 256 distinct
colors the palette is exact and the round trip is lossless.

All malformed input is reported as GifDecodeError carrying the byte
offset where parsing failed; no other exception type escapes decode_gif.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MAX_CANVAS_PIXELS = 1 << 24  # refuse absurd logical screens (memory guard)
DEFAULT_DELAY_CS = 10  # substituted for delay 0, as browsers do


class GifDecodeError(ValueError):
    """Malformed GIF data; `offset` points at the failing byte."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


@dataclass
class FrameSequence:
    """Decoded animation: composited RGB frames plus timing metadata."""

    frames: np.ndarray  # (F, H, W, 3) uint8
    delays_cs: list[int] = field(default_factory=list)  # per frame, centiseconds
    loop_count: int | None = None  # None: no loop block; 0: forever

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def height(self) -> int:
        return int(self.frames.shape[1])

    @property
    def width(self) -> int:
        return int(self.frames.shape[2])


# -- byte reader -------------------------------------------------------------


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise GifDecodeError("unexpected end of data", len(self.data))
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def subblocks(self) -> bytes:
        """Concatenate data sub-blocks up to and including the 0 terminator."""
        parts = []
        while True:
            n = self.u8()
            if n == 0:
                return b"".join(parts)
            parts.append(self.take(n))

    def skip_subblocks(self) -> None:
        while True:
            n = self.u8()
            if n == 0:
                return
            self.take(n)


# -- LZW ---------------------------------------------------------------------


def _lzw_decode(data: bytes, min_code_size: int, expected: int, offset: int) -> bytes:
    if not 2 <= min_code_size <= 11:
        raise GifDecodeError(f"bad LZW minimum code size {min_code_size}", offset)
    clear = 1 << min_code_size
    eoi = clear + 1
    base = [bytes([i]) for i in range(clear)] + [b"", b""]
    table = list(base)
    width = min_code_size + 1
    buf = 0
    bits = 0
    pos = 0
    prev: bytes | None = None
    out = bytearray()
    while len(out) < expected:
        while bits < width:
            if pos >= len(data):
                raise GifDecodeError("LZW stream truncated", offset)
            buf |= data[pos] << bits
            bits += 8
            pos += 1
        code = buf & ((1 << width) - 1)
        buf >>= width
        bits -= width
        if code == clear:
            table = list(base)
            width = min_code_size + 1
            prev = None
            continue
        if code == eoi:
            break
        if prev is None:
            if code >= len(table):
                raise GifDecodeError(f"invalid LZW code {code}", offset)
            entry = table[code]
        elif code < len(table):
            entry = table[code]
            table.append(prev + entry[:1])
        elif code == len(table):
            entry = prev + prev[:1]
            table.append(entry)
        else:
            raise GifDecodeError(f"invalid LZW code {code}", offset)
        if len(table) == (1 << width) and width < 12:
            width += 1
        out += entry
        prev = entry
    if len(out) < expected:
        raise GifDecodeError(
            f"image data ended after {len(out)} of {expected} pixels", offset
        )
    return bytes(out[:expected])


def _lzw_encode(indices: bytes, min_code_size: int) -> bytes:
    clear = 1 << min_code_size
    eoi = clear + 1
    out = bytearray()
    buf = 0
    bits = 0
    width = min_code_size + 1

    def emit(code: int) -> None:
        nonlocal buf, bits
        buf |= code << bits
        bits += width
        while bits >= 8:
            out.append(buf & 0xFF)
            buf >>= 8
            bits -= 8

    emit(clear)
    table: dict[tuple[int, int], int] = {}
    next_code = eoi + 1
    prefix = -1
    for b in indices:
        if prefix < 0:
            prefix = b
            continue
        code = table.get((prefix, b))
        if code is not None:
            prefix = code
            continue
        emit(prefix)
        if next_code < 4096:
            table[(prefix, b)] = next_code
            next_code += 1
            if next_code == (1 << width) + 1 and width < 12:
                width += 1
        else:  # table full: reset, matching the decoder's clear handling
            emit(clear)
            table = {}
            width = min_code_size + 1
            next_code = eoi + 1
        prefix = b
    if prefix >= 0:
        emit(prefix)
    emit(eoi)
    if bits:
        out.append(buf & 0xFF)
    return bytes(out)


# -- decoding ----------------------------------------------------------------

_INTERLACE_PASSES = ((0, 8), (4, 8), (2, 4), (1, 2))


def _deinterlace(rows: np.ndarray) -> np.ndarray:
    h = rows.shape[0]
    order = np.concatenate([np.arange(start, h, step) for start, step in _INTERLACE_PASSES])
    out = np.empty_like(rows)
    out[order] = rows
    return out


def decode_gif(data: bytes) -> FrameSequence:
    """Decode a GIF file into composited RGB frames.

    Raises GifDecodeError for anything malformed, with the byte offset
    of the failure. Frames with delay 0 get DEFAULT_DELAY_CS instead.
    """
    r = _Reader(data)
    magic = r.take(6)
    if magic not in (b"GIF87a", b"GIF89a"):
        raise GifDecodeError("not a GIF file", 0)
    width = r.u16()
    height = r.u16()
    if width == 0 or height == 0:
        raise GifDecodeError("zero logical screen dimension", 6)
    if width * height > MAX_CANVAS_PIXELS:
        raise GifDecodeError(f"logical screen {width}x{height} too large", 6)
    packed = r.u8()
    bg_index = r.u8()
    r.u8()  # pixel aspect ratio, unused
    gct = None
    if packed & 0x80:
        gct_size = 2 << (packed & 0x07)
        gct = np.frombuffer(r.take(3 * gct_size), dtype=np.uint8).reshape(-1, 3)

    if gct is not None and bg_index < len(gct):
        bg_rgb = gct[bg_index].copy()
    else:
        bg_rgb = np.array([255, 255, 255], dtype=np.uint8)

    canvas = np.empty((height, width, 3), dtype=np.uint8)
    canvas[:] = bg_rgb

    frames: list[np.ndarray] = []
    delays: list[int] = []
    loop_count: int | None = None

    # pending graphic control state, applies to the next image only
    delay_cs = 0
    transparent: int | None = None
    disposal = 0

    while True:
        at = r.pos
        block = r.u8()
        if block == 0x3B:  # trailer
            break
        if block == 0x21:  # extension
            label = r.u8()
            if label == 0xF9:
                body = r.subblocks()
                if len(body) < 4:
                    raise GifDecodeError("graphic control block too short", at)
                gc_packed = body[0]
                delay_cs = struct.unpack("<H", body[1:3])[0]
                transparent = body[3] if gc_packed & 0x01 else None
                disposal = (gc_packed >> 2) & 0x07
            elif label == 0xFF:
                body = r.subblocks()
                if body[:11] == b"NETSCAPE2.0" and len(body) >= 14 and body[11] == 1:
                    loop_count = struct.unpack("<H", body[12:14])[0]
            else:
                r.skip_subblocks()
            continue
        if block != 0x2C:
            raise GifDecodeError(f"unknown block type 0x{block:02x}", at)

        # image descriptor
        left = r.u16()
        top = r.u16()
        iw = r.u16()
        ih = r.u16()
        ipacked = r.u8()
        if iw == 0 or ih == 0:
            raise GifDecodeError("zero image dimension", at)
        if left + iw > width or top + ih > height:
            raise GifDecodeError("image extends outside logical screen", at)
        if ipacked & 0x80:
            lct_size = 2 << (ipacked & 0x07)
            table = np.frombuffer(r.take(3 * lct_size), dtype=np.uint8).reshape(-1, 3)
        elif gct is not None:
            table = gct
        else:
            raise GifDecodeError("image has no color table", at)

        min_code_size = r.u8()
        compressed = r.subblocks()
        indices = np.frombuffer(
            _lzw_decode(compressed, min_code_size, iw * ih, at), dtype=np.uint8
        )
        if int(indices.max(initial=0)) >= len(table):
            raise GifDecodeError("pixel index outside color table", at)
        grid = indices.reshape(ih, iw)
        if ipacked & 0x40:
            grid = _deinterlace(grid)

        region = canvas[top : top + ih, left : left + iw]
        rgb = table[grid]
        if transparent is not None:
            mask = grid != transparent
            region[mask] = rgb[mask]
        else:
            region[:] = rgb
        frames.append(canvas.copy())
        delays.append(delay_cs if delay_cs > 0 else DEFAULT_DELAY_CS)

        # dispose for the next frame; "restore previous" is folded into
        # "restore background" to keep compositing single-pass
        if disposal in (2, 3):
            canvas[top : top + ih, left : left + iw] = bg_rgb
        delay_cs = 0
        transparent = None
        disposal = 0

    if not frames:
        raise GifDecodeError("no image data", len(data))
    return FrameSequence(np.stack(frames), delays, loop_count)


# -- palette -----------------------------------------------------------------


def _pack_rgb(pixels: np.ndarray) -> np.ndarray:
    p = pixels.astype(np.uint32)
    return (p[..., 0] << 16) | (p[..., 1] << 8) | p[..., 2]


def _median_cut(colors: np.ndarray, counts: np.ndarray, target: int) -> np.ndarray:
    """Reduce unique `colors` (weighted by `counts`) to <= target entries."""
    boxes = [np.arange(len(colors))]
    while len(boxes) < target:
        best = -1
        best_range = 0
        for bi, idx in enumerate(boxes):
            if len(idx) < 2:
                continue
            span = colors[idx].max(axis=0).astype(int) - colors[idx].min(axis=0)
            r = int(span.max())
            if r > best_range:
                best_range = r
                best = bi
        if best < 0:
            break
        idx = boxes[best]
        span = colors[idx].max(axis=0).astype(int) - colors[idx].min(axis=0)
        chan = int(np.argmax(span))
        order = idx[np.argsort(colors[idx, chan], kind="stable")]
        w = counts[order]
        half = np.searchsorted(np.cumsum(w), w.sum() / 2.0)
        half = int(np.clip(half, 1, len(order) - 1))
        boxes[best] = order[:half]
        boxes.append(order[half:])
    palette = np.empty((len(boxes), 3), dtype=np.uint8)
    for bi, idx in enumerate(boxes):
        w = counts[idx].astype(np.float64)
        mean = (colors[idx].astype(np.float64) * w[:, None]).sum(axis=0) / w.sum()
        palette[bi] = np.clip(np.round(mean), 0, 255).astype(np.uint8)
    # dedupe then sort for a canonical table
    palette = np.unique(_pack_rgb(palette))
    return np.column_stack(
        [(palette >> 16) & 0xFF, (palette >> 8) & 0xFF, palette & 0xFF]
    ).astype(np.uint8)


def build_palette(frames: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Global palette for a frame stack and per-pixel index array.

    Exact (lossless) when the stack holds <= 256 distinct colors;
    otherwise median cut to 256 and nearest-color mapping.
    """
    packed = _pack_rgb(frames)
    uniq, inverse, counts = np.unique(packed, return_inverse=True, return_counts=True)
    colors = np.column_stack(
        [(uniq >> 16) & 0xFF, (uniq >> 8) & 0xFF, uniq & 0xFF]
    ).astype(np.uint8)
    if len(uniq) <= 256:
        palette = colors  # already sorted by packed value: canonical
        index_of = np.arange(len(uniq), dtype=np.uint8)
    else:
        palette = _median_cut(colors, counts, 256)
        diff = colors.astype(np.int64)[:, None, :] - palette.astype(np.int64)[None, :, :]
        index_of = np.argmin((diff * diff).sum(axis=2), axis=1).astype(np.uint8)
    return palette, index_of[inverse].reshape(frames.shape[:-1])


# -- encoding ----------------------------------------------------------------


def _write_subblocks(out: bytearray, payload: bytes) -> None:
    for i in range(0, len(payload), 255):
        chunk = payload[i : i + 255]
        out.append(len(chunk))
        out += chunk
    out.append(0)


def encode_gif(seq: FrameSequence) -> bytes:
    """Encode frames with one global color table.

    Every delay must be positive; loop_count None omits the loop block,
    0 means repeat forever, n > 0 repeats n times.
    """
    frames = np.asarray(seq.frames)
    if frames.ndim != 4 or frames.shape[3] != 3 or frames.dtype != np.uint8:
        raise ValueError("frames must be a (F, H, W, 3) uint8 array")
    n_frames, height, width, _ = frames.shape
    if n_frames == 0:
        raise ValueError("cannot encode an empty sequence")
    if width > 0xFFFF or height > 0xFFFF:
        raise ValueError("frame dimensions exceed the format limit of 65535")
    delays = list(seq.delays_cs)
    if len(delays) != n_frames:
        raise ValueError(f"{n_frames} frames but {len(delays)} delays")
    if any(d <= 0 or d > 0xFFFF for d in delays):
        raise ValueError("delays must be in 1..65535 centiseconds")

    palette, indexed = build_palette(frames)
    table_bits = max(1, int(np.ceil(np.log2(max(len(palette), 2)))))
    table_size = 1 << table_bits
    min_code_size = max(2, table_bits)

    out = bytearray()
    out += b"GIF89a"
    out += struct.pack("<HH", width, height)
    out.append(0x80 | 0x70 | (table_bits - 1))  # GCT present, 8-bit color res
    out.append(0)  # background color index
    out.append(0)  # aspect ratio
    out += palette.tobytes()
    out += b"\x00\x00\x00" * (table_size - len(palette))

    if seq.loop_count is not None:
        out += b"\x21\xff\x0bNETSCAPE2.0\x03\x01"
        out += struct.pack("<H", seq.loop_count)
        out.append(0)

    for f in range(n_frames):
        out += b"\x21\xf9\x04"
        out.append(0x04)  # disposal 1 (leave), no transparency
        out += struct.pack("<H", delays[f])
        out += b"\x00\x00"  # transparent index, terminator
        out += b"\x2c"
        out += struct.pack("<HHHH", 0, 0, width, height)
        out.append(0)  # no local table, not interlaced
        out.append(min_code_size)
        _write_subblocks(out, _lzw_encode(indexed[f].tobytes(), min_code_size))

    out.append(0x3B)
    return bytes(out)


def load_gif(path) -> FrameSequence:
    with open(path, "rb") as fh:
        return decode_gif(fh.read())


def save_gif(seq: FrameSequence, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_gif(seq))
