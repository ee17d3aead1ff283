"""Codec tests: round trips, compositing features, structured errors, fuzz."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kinetype.gif import (
    DEFAULT_DELAY_CS,
    FrameSequence,
    GifDecodeError,
    build_palette,
    decode_gif,
    encode_gif,
)
from kinetype.gif import _lzw_decode, _lzw_encode, _write_subblocks


def _rand_frames(rng, f, h, w, colors):
    palette = rng.randint(0, 256, size=(colors, 3), dtype=np.uint8)
    idx = rng.randint(0, colors, size=(f, h, w))
    return palette[idx]


def test_roundtrip_exact_small_palette():
    rng = np.random.RandomState(0)
    frames = _rand_frames(rng, 4, 17, 23, 30)
    seq = FrameSequence(frames, [5, 10, 15, 20], loop_count=0)
    back = decode_gif(encode_gif(seq))
    assert np.array_equal(back.frames, seq.frames)
    assert back.delays_cs == seq.delays_cs
    assert back.loop_count == 0


def test_roundtrip_256_colors_exact():
    rng = np.random.RandomState(1)
    frames = _rand_frames(rng, 2, 16, 16, 256)
    seq = FrameSequence(frames, [10, 10])
    back = decode_gif(encode_gif(seq))
    assert np.array_equal(back.frames, seq.frames)


def test_reencode_is_byte_identical():
    rng = np.random.RandomState(2)
    seq = FrameSequence(_rand_frames(rng, 3, 12, 12, 40), [10, 10, 10], 0)
    data = encode_gif(seq)
    assert encode_gif(decode_gif(data)) == data


def test_many_colors_quantized():
    rng = np.random.RandomState(3)
    frames = rng.randint(0, 256, size=(1, 32, 32, 3), dtype=np.uint8)
    assert len(np.unique(frames.reshape(-1, 3), axis=0)) > 256
    seq = FrameSequence(frames, [10])
    back = decode_gif(encode_gif(seq))
    assert back.frames.shape == frames.shape
    err = np.abs(back.frames.astype(int) - frames.astype(int)).mean()
    assert err < 48  # quantization stays in the ballpark


def test_palette_exact_when_small():
    frames = np.zeros((1, 4, 4, 3), dtype=np.uint8)
    frames[0, 2:, 2:] = (10, 200, 30)
    palette, indexed = build_palette(frames)
    assert len(palette) == 2
    assert np.array_equal(palette[indexed[0]], frames[0])


def test_delay_validation():
    seq = FrameSequence(np.zeros((1, 2, 2, 3), dtype=np.uint8), [0])
    with pytest.raises(ValueError, match="delays"):
        encode_gif(seq)


def test_delay_zero_substituted_on_decode():
    seq = FrameSequence(np.zeros((1, 2, 2, 3), dtype=np.uint8), [10])
    data = bytearray(encode_gif(seq))
    at = data.index(b"\x21\xf9")  # graphic control block
    struct.pack_into("<H", data, at + 4, 0)  # zero out the delay
    back = decode_gif(bytes(data))
    assert back.delays_cs == [DEFAULT_DELAY_CS]


def test_loop_count_absent():
    seq = FrameSequence(np.zeros((1, 2, 2, 3), dtype=np.uint8), [10], loop_count=None)
    data = encode_gif(seq)
    assert b"NETSCAPE" not in data
    assert decode_gif(data).loop_count is None


def test_loop_count_roundtrip():
    seq = FrameSequence(np.zeros((1, 2, 2, 3), dtype=np.uint8), [10], loop_count=7)
    assert decode_gif(encode_gif(seq)).loop_count == 7


# -- hand-built streams exercising decode features ---------------------------


def _screen(w, h, gct):
    """Header + logical screen descriptor + global color table."""
    bits = max((len(gct) - 1).bit_length(), 1)
    out = bytearray(b"GIF89a")
    out += struct.pack("<HH", w, h)
    out.append(0x80 | (bits - 1))
    out += b"\x00\x00"
    table = bytearray()
    for rgb in gct:
        table += bytes(rgb)
    table += b"\x00" * (3 * (1 << bits) - len(table))
    return out + table


def _image(indices_2d, left=0, top=0, interlace=False, min_code=2):
    h, w = indices_2d.shape
    out = bytearray(b"\x2c")
    out += struct.pack("<HHHH", left, top, w, h)
    out.append(0x40 if interlace else 0)
    out.append(min_code)
    _write_subblocks(out, _lzw_encode(bytes(indices_2d.tobytes()), min_code))
    return out


def _gce(disposal=0, delay=10, transparent=None):
    packed = (disposal & 7) << 2 | (1 if transparent is not None else 0)
    return bytes([0x21, 0xF9, 4, packed]) + struct.pack("<H", delay) + bytes(
        [transparent or 0, 0]
    )


RED, GREEN, BLUE, WHITE = (255, 0, 0), (0, 255, 0), (0, 0, 255), (255, 255, 255)


def test_transparency_shows_previous_frame():
    gct = [WHITE, RED, GREEN, BLUE]
    full = np.ones((4, 4), dtype=np.uint8)  # all red
    patch = np.full((2, 2), 2, dtype=np.uint8)  # green
    patch[0, 0] = 3  # transparent index 3 below
    data = bytes(
        _screen(4, 4, gct)
        + _gce(disposal=1)
        + _image(full)
        + _gce(disposal=1, transparent=3)
        + _image(patch, left=1, top=1)
        + b"\x3b"
    )
    seq = decode_gif(data)
    assert seq.num_frames == 2
    f2 = seq.frames[1]
    assert tuple(f2[1, 1]) == RED  # transparent pixel kept frame 1
    assert tuple(f2[1, 2]) == GREEN
    assert tuple(f2[2, 1]) == GREEN


def test_disposal_background_restores():
    gct = [WHITE, RED, GREEN, BLUE]
    base = np.ones((4, 4), dtype=np.uint8)
    patch = np.full((2, 2), 2, dtype=np.uint8)
    dot = np.full((1, 1), 3, dtype=np.uint8)
    data = bytes(
        _screen(4, 4, gct)
        + _gce(disposal=1)
        + _image(base)
        + _gce(disposal=2)  # restore patch area to background after frame 2
        + _image(patch, left=1, top=1)
        + _gce(disposal=1)
        + _image(dot, left=0, top=0)
        + b"\x3b"
    )
    seq = decode_gif(data)
    f3 = seq.frames[2]
    assert tuple(f3[0, 0]) == BLUE
    assert tuple(f3[1, 1]) == WHITE  # background color index 0
    assert tuple(f3[3, 3]) == RED  # untouched by disposal rectangle


def test_interlaced_rows_reordered():
    gct = [WHITE, RED, GREEN, BLUE]
    # final rows 0..3 have colors 0,1,2,3; stored in pass order 0,2,1,3
    stored = np.array([[0], [2], [1], [3]], dtype=np.uint8)
    data = bytes(_screen(1, 4, gct) + _image(stored, interlace=True) + b"\x3b")
    seq = decode_gif(data)
    got = [tuple(seq.frames[0][r, 0]) for r in range(4)]
    assert got == [WHITE, RED, GREEN, BLUE]


def test_local_color_table_wins():
    gct = [WHITE, RED]
    img = np.zeros((2, 2), dtype=np.uint8)
    block = bytearray(b"\x2c")
    block += struct.pack("<HHHH", 0, 0, 2, 2)
    block.append(0x80)  # local table, 2 entries
    block += bytes(BLUE) + bytes(GREEN)
    block.append(2)
    _write_subblocks(block, _lzw_encode(img.tobytes(), 2))
    seq = decode_gif(bytes(_screen(2, 2, gct) + block + b"\x3b"))
    assert tuple(seq.frames[0][0, 0]) == BLUE


# -- errors ------------------------------------------------------------------


def test_not_a_gif_offset_zero():
    with pytest.raises(GifDecodeError) as exc:
        decode_gif(b"PNGais not a gif, promise")
    assert exc.value.offset == 0


def test_truncated_reports_offset():
    seq = FrameSequence(np.zeros((1, 4, 4, 3), dtype=np.uint8), [10])
    data = encode_gif(seq)
    with pytest.raises(GifDecodeError) as exc:
        decode_gif(data[:20])
    assert 0 < exc.value.offset <= 20


def test_unknown_block_type():
    data = bytes(_screen(2, 2, [WHITE, RED])) + b"\x99"
    with pytest.raises(GifDecodeError, match="unknown block"):
        decode_gif(data)


def test_image_outside_screen():
    img = _image(np.zeros((2, 2), dtype=np.uint8), left=3, top=0)
    with pytest.raises(GifDecodeError, match="outside"):
        decode_gif(bytes(_screen(4, 4, [WHITE, RED]) + img + b"\x3b"))


def test_no_image_data():
    with pytest.raises(GifDecodeError, match="no image data"):
        decode_gif(bytes(_screen(2, 2, [WHITE, RED])) + b"\x3b")


def test_oversize_screen_refused():
    head = bytearray(b"GIF89a")
    head += struct.pack("<HH", 60000, 60000)
    head += b"\x00\x00\x00"
    with pytest.raises(GifDecodeError, match="too large"):
        decode_gif(bytes(head) + b"\x3b")


def test_encode_rejects_bad_shapes():
    with pytest.raises(ValueError):
        encode_gif(FrameSequence(np.zeros((2, 2, 3), dtype=np.uint8), [10]))
    with pytest.raises(ValueError, match="delays"):
        encode_gif(FrameSequence(np.zeros((1, 2, 2, 3), dtype=np.uint8), [10, 10]))


# -- LZW ---------------------------------------------------------------------


@given(
    st.integers(2, 7).flatmap(
        lambda bits: st.tuples(
            st.just(bits),
            st.lists(st.integers(0, (1 << bits) - 1), min_size=1, max_size=4000),
        )
    )
)
@settings(max_examples=60, deadline=None)
def test_lzw_roundtrip(case):
    bits, symbols = case
    payload = bytes(symbols)
    encoded = _lzw_encode(payload, bits)
    assert _lzw_decode(encoded, bits, len(payload), 0) == payload


def test_lzw_dictionary_reset():
    # long low-entropy stream forces the 12-bit table to fill and reset
    rng = np.random.RandomState(4)
    payload = bytes(rng.randint(0, 4, size=120_000, dtype=np.uint8))
    encoded = _lzw_encode(payload, 2)
    assert _lzw_decode(encoded, 2, len(payload), 0) == payload


def test_lzw_truncated_stream():
    encoded = _lzw_encode(b"\x00\x01\x02\x03" * 10, 2)
    with pytest.raises(GifDecodeError, match="truncated"):
        _lzw_decode(encoded[:2], 2, 40, 0)


def test_lzw_invalid_code():
    # width 3 after the clear code; 7 is far beyond the table
    stream = bytes([0b00111100, 0b0000011])  # clear(4), then code 7
    with pytest.raises(GifDecodeError, match="invalid"):
        _lzw_decode(stream, 2, 10, 0)


# -- fuzz --------------------------------------------------------------------


def test_fuzz_random_blobs_never_crash():
    rng = np.random.RandomState(5)
    for _ in range(300):
        blob = rng.bytes(rng.randint(0, 400))
        try:
            decode_gif(blob)
        except GifDecodeError:
            pass


def test_fuzz_mutated_valid_gif_never_crashes(slide):
    seq, _ = slide
    data = bytearray(encode_gif(seq))
    rng = np.random.RandomState(6)
    for _ in range(150):
        mutated = bytearray(data)
        for _ in range(rng.randint(1, 6)):
            mutated[rng.randint(0, len(mutated))] = rng.randint(0, 256)
        try:
            decode_gif(bytes(mutated))
        except GifDecodeError:
            pass


def test_fuzz_truncations_never_crash(slide):
    seq, _ = slide
    data = encode_gif(seq)
    for cut in range(0, len(data), 97):
        try:
            decode_gif(data[:cut])
        except GifDecodeError:
            pass
