"""Binary PPM (P6) decoding/encoding and deterministic bilinear resizing.

P6 with maxval 255 is the only image format handled natively; anything
else is expected to be converted beforehand (see the CLI docs). All
operations are pure and safe to call from multiple threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import PpmError

_WHITESPACE = b" \t\n\r\x0b\x0c"


@dataclass(frozen=True)
class RasterImage:
    """Decoded RGB image; `pixels` is (height, width, 3) uint8, row-major."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if not isinstance(p, np.ndarray) or p.dtype != np.uint8:
            raise ValueError("pixels must be a uint8 ndarray")
        if p.ndim != 3 or p.shape[2] != 3:
            raise ValueError(f"pixels must have shape (h, w, 3), got {p.shape}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("image dimensions must be at least 1x1")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return 3

    def __eq__(self, other):
        if not isinstance(other, RasterImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and np.array_equal(
            self.pixels, other.pixels
        )


def _skip_header_space(data: bytes, pos: int) -> int:
    """Advance past whitespace and `#` comments inside the PPM header."""
    n = len(data)
    while pos < n:
        b = data[pos:pos + 1]
        if b == b"#":
            while pos < n and data[pos:pos + 1] != b"\n":
                pos += 1
        elif b in _WHITESPACE:
            pos += 1
        else:
            break
    return pos


def _read_header_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    pos = _skip_header_space(data, pos)
    start = pos
    n = len(data)
    while pos < n and data[pos:pos + 1].isdigit():
        pos += 1
    if pos == start:
        raise PpmError(f"expected integer for {what}", offset=start)
    return int(data[start:pos]), pos


def decode_ppm(data: bytes) -> RasterImage:
    """Decode binary PPM bytes (magic P6, maxval 255) into a RasterImage.

    Header comments introduced by `#` are permitted. Malformed input
    raises PpmError carrying the byte offset of the problem.
    """
    if data[:2] != b"P6" or (len(data) > 2 and data[2:3] not in _WHITESPACE and data[2:3] != b"#"):
        raise PpmError("not a binary PPM (magic is not P6)", offset=0)
    width, pos = _read_header_int(data, 2, "width")
    height, pos = _read_header_int(data, pos, "height")
    maxval_at = _skip_header_space(data, pos)
    maxval, pos = _read_header_int(data, maxval_at, "maxval")
    if maxval != 255:
        raise PpmError(f"unsupported maxval {maxval}, expected 255", offset=maxval_at)
    if width < 1 or height < 1:
        raise PpmError(f"invalid dimensions {width}x{height}", offset=2)
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
        raise PpmError("expected single whitespace after maxval", offset=pos)
    pos += 1
    expected = width * height * 3
    payload = data[pos:pos + expected]
    if len(payload) < expected:
        raise PpmError(
            f"truncated pixel payload: need {expected} bytes, have {len(payload)}",
            offset=pos + len(payload),
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return RasterImage(pixels=pixels.copy())


def encode_ppm(image: RasterImage) -> bytes:
    """Encode to binary PPM; header is exactly `P6\\n<w> <h>\\n255\\n`."""
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels.tobytes()


def resize_bilinear(image: RasterImage, out_w: int, out_h: int) -> RasterImage:
    """Resize with half-pixel-center bilinear sampling.

    src = (dst + 0.5) * in/out - 0.5 clamped to [0, in-1]; the blend is
    rounded half-away-from-zero to 8 bits. Deterministic across runs and
    platforms, and identical between the numba and numpy kernels.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"target dimensions must be positive, got {out_w}x{out_h}")
    if out_w == image.width and out_h == image.height:
        return RasterImage(pixels=image.pixels.copy())
    out = _kernels.resize_bilinear_u8(image.pixels, out_w, out_h)
    return RasterImage(pixels=out)
