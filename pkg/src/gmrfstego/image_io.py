"""Image and float-map serialization plus residual preparation.

Covers are binary PGM (P5, maxval 255).  Derived per-pixel fields travel
in a small container format: magic "GMAP", a version byte, little-endian
u32 width and height, then row-major little-endian float64 values.  Both
round-trip bit exactly.

The residual that feeds the model estimators is the cover minus its
locally adaptive (Wiener) denoised version.
"""

from __future__ import annotations

import struct

import numpy as np

GMAP_MAGIC = b"GMAP"
GMAP_VERSION = 1

# local-variance floor of the adaptive filter; keeps flat regions stable
NU_FLOOR = 1e-10


class FormatError(ValueError):
    """Malformed or unsupported serialized content."""


def parse_pgm(data: bytes) -> np.ndarray:
    """Decode a binary PGM byte stream into a uint8 matrix.

    Accepts only P5 with maxval 255.  Header comments (# to end of line)
    are allowed anywhere whitespace is.
    """
    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(data):
            c = data[pos:pos + 1]
            if c == b"#":
                nl = data.find(b"\n", pos)
                if nl < 0:
                    raise FormatError("unterminated header comment")
                pos = nl + 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() \
                and data[pos:pos + 1] != b"#":
            pos += 1
        if pos == start:
            raise FormatError("truncated header")
        return data[start:pos]

    magic = token()
    if magic != b"P5":
        raise FormatError(f"unsupported magic {magic!r}, need binary P5")
    try:
        width = int(token())
        height = int(token())
        maxval = int(token())
    except ValueError as exc:
        raise FormatError("non-numeric header field") from exc
    if width < 1 or height < 1:
        raise FormatError("degenerate image dimensions")
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval}, need 255")
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError("missing raster separator")
    pos += 1
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise FormatError("truncated raster data")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def format_pgm(img: np.ndarray) -> bytes:
    """Encode a uint8 matrix as canonical binary PGM bytes."""
    img = np.asarray(img)
    if img.ndim != 2:
        raise FormatError("image must be a 2-D array")
    if img.dtype != np.uint8:
        raise FormatError("image must be uint8")
    h, w = img.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(img).tobytes()


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def write_pgm(path, img: np.ndarray) -> None:
    data = format_pgm(img)
    with open(path, "wb") as fh:
        fh.write(data)


def parse_float_map(data: bytes) -> np.ndarray:
    if data[:4] != GMAP_MAGIC:
        raise FormatError("bad float-map magic")
    if len(data) < 13:
        raise FormatError("truncated float-map header")
    version = data[4]
    if version != GMAP_VERSION:
        raise FormatError(f"unsupported float-map version {version}")
    width, height = struct.unpack_from("<II", data, 5)
    if width < 1 or height < 1:
        raise FormatError("degenerate float-map dimensions")
    need = 13 + 8 * width * height
    if len(data) != need:
        raise FormatError(
            f"float-map length {len(data)} != expected {need}")
    values = np.frombuffer(data, dtype="<f8", count=width * height, offset=13)
    return values.reshape(height, width).astype(np.float64)


def format_float_map(grid: np.ndarray) -> bytes:
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2:
        raise FormatError("float map must be a 2-D array")
    h, w = grid.shape
    header = GMAP_MAGIC + struct.pack("<BII", GMAP_VERSION, w, h)
    return header + grid.astype("<f8").tobytes(order="C")


def read_float_map(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return parse_float_map(fh.read())


def write_float_map(path, grid: np.ndarray) -> None:
    data = format_float_map(grid)
    with open(path, "wb") as fh:
        fh.write(data)


def _window_bounds(window: int):
    """Offsets of an m-wide box anchored so odd sizes center exactly."""
    left = (window - 1) // 2
    right = window // 2
    return left, right


def _box_mean(padded: np.ndarray, window: int, shape) -> np.ndarray:
    """Mean over window x window boxes of an already padded array."""
    view = np.lib.stride_tricks.sliding_window_view(
        padded, (window, window))[:shape[0], :shape[1]]
    return view.mean(axis=(2, 3))


def wiener_denoise(img: np.ndarray, window: int = 2) -> np.ndarray:
    """Locally adaptive minimum mean-square denoiser.

    Per pixel, with the local mean m and variance v over the box and the
    noise power nu estimated as the mean of all local variances:

        out = m + max(0, v - nu) / max(v, floor) * (x - m)

    Flat regions collapse to their mean, busy regions pass through.
    Window is the box side; even sizes anchor a half pixel up-left.
    Borders use symmetric padding.
    """
    if window not in (2, 3, 4, 5):
        raise ValueError("window must be one of 2, 3, 4, 5")
    x = np.asarray(img, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("image must be a 2-D array")
    left, right = _window_bounds(window)
    padded = np.pad(x, ((left, right), (left, right)), mode="symmetric")
    mean = _box_mean(padded, window, x.shape)
    sq_mean = _box_mean(padded * padded, window, x.shape)
    var = np.maximum(sq_mean - mean * mean, 0.0)
    nu = var.mean()
    gain = np.maximum(var - nu, 0.0) / np.maximum(var, NU_FLOOR)
    return mean + gain * (x - mean)


def compute_residual(img: np.ndarray, window: int = 2) -> np.ndarray:
    """Cover minus its denoised version; the mean-free model input."""
    x = np.asarray(img, dtype=np.float64)
    return x - wiener_denoise(img, window)
