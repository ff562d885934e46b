"""Grayscale image container, decoding, sub-pixel sampling and geometric transforms.

Pixels are stored as float64 immediately on decode so that intensity
transforms and resampling introduce no quantization; descriptor files
downstream are float32, but everything in memory stays double precision
(the exactness of the illumination-invariance property depends on it).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateOutput,
    MalformedFile,
    OutOfBounds,
    UnsupportedFormat,
)

# ITU-R BT.601 luma weights, applied in floating point (no 8-bit rounding).
_LUMA = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class GrayImage:
    """Immutable 2-D grayscale raster.

    ``pixels`` is a read-only (height, width) float64 array, nominal
    range [0, 255].  Coordinates are (x, y) with x the column index and
    y the row index, y increasing downward.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.pixels, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("pixels must be a non-empty 2-D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("pixels must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def _tokenize_pnm_header(data: bytes, n_tokens: int) -> tuple[list[int], int]:
    """Read ``n_tokens`` integers after the magic, skipping '#' comments.

    Returns the values and the offset of the first raster byte (one
    whitespace character past the last token).
    """
    tokens: list[int] = []
    i = 2  # past the 2-byte magic
    while len(tokens) < n_tokens:
        if i >= len(data):
            raise MalformedFile("truncated PGM header")
        c = data[i : i + 1]
        if c.isspace():
            i += 1
        elif c == b"#":
            j = data.find(b"\n", i)
            if j < 0:
                raise MalformedFile("unterminated comment in PGM header")
            i = j + 1
        elif c.isdigit():
            j = i
            while j < len(data) and data[j : j + 1].isdigit():
                j += 1
            tokens.append(int(data[i:j]))
            i = j
        else:
            raise MalformedFile(f"unexpected byte {c!r} in PGM header")
    if i >= len(data) or not data[i : i + 1].isspace():
        raise MalformedFile("missing whitespace after PGM maxval")
    return tokens, i + 1


def _decode_pgm(data: bytes) -> GrayImage:
    if data[:2] != b"P5":
        raise UnsupportedFormat("only binary (P5) PGM is supported")
    (width, height, maxval), offset = _tokenize_pnm_header(data, 3)
    if width < 1 or height < 1:
        raise MalformedFile("non-positive PGM dimensions")
    if not 0 < maxval < 256:
        raise UnsupportedFormat(f"PGM maxval {maxval} (only 8-bit supported)")
    n = width * height
    raster = data[offset : offset + n]
    if len(raster) < n:
        raise MalformedFile("truncated PGM raster")
    pixels = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    return GrayImage(pixels.reshape(height, width))


def _decode_png(data: bytes) -> GrayImage:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            mode = im.mode
            if mode == "P":
                im = im.convert("RGB")
                mode = "RGB"
            if mode == "L":
                arr = np.asarray(im, dtype=np.float64)
            elif mode in ("RGB", "RGBA"):
                arr = np.asarray(im, dtype=np.float64)[:, :, :3]
                arr = _LUMA[0] * arr[:, :, 0] + _LUMA[1] * arr[:, :, 1] + _LUMA[2] * arr[:, :, 2]
            else:
                raise UnsupportedFormat(f"unsupported PNG mode {mode!r}")
    except UnidentifiedImageError as exc:
        raise MalformedFile(f"invalid PNG data: {exc}") from exc
    except (OSError, SyntaxError) as exc:
        raise MalformedFile(f"broken PNG stream: {exc}") from exc
    return GrayImage(arr)


def rgb_to_gray(r: float, g: float, b: float) -> float:
    """Luma conversion used for all RGB inputs."""
    return _LUMA[0] * r + _LUMA[1] * g + _LUMA[2] * b


def decode_image(data: bytes, fmt: str | None = None) -> GrayImage:
    """Decode raw PGM (binary P5) or PNG bytes into a GrayImage.

    ``fmt`` may be "pgm" or "png" to force a format; by default it is
    sniffed from the magic bytes.
    """
    if fmt is None:
        if data[:2] in (b"P5", b"P2", b"P1", b"P4", b"P3", b"P6"):
            fmt = "pgm"
        elif data[:8] == b"\x89PNG\r\n\x1a\n":
            fmt = "png"
        else:
            raise UnsupportedFormat("unrecognized image magic bytes")
    fmt = fmt.lower()
    if fmt == "pgm":
        return _decode_pgm(data)
    if fmt == "png":
        return _decode_png(data)
    raise UnsupportedFormat(f"unknown format {fmt!r}")


def load_image(path) -> GrayImage:
    with open(path, "rb") as f:
        return decode_image(f.read())


def encode_pgm(img: GrayImage) -> bytes:
    """8-bit binary PGM dump (values rounded and clipped to [0, 255])."""
    raster = np.clip(np.rint(img.pixels), 0, 255).astype(np.uint8)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + raster.tobytes()


def save_pgm(img: GrayImage, path) -> None:
    with open(path, "wb") as f:
        f.write(encode_pgm(img))


def sample_bilinear(img: GrayImage, x: float, y: float) -> float:
    """Bilinear interpolation; exact at integer lattice coordinates."""
    if not (0.0 <= x <= img.width - 1 and 0.0 <= y <= img.height - 1):
        raise OutOfBounds(f"({x}, {y}) outside {img.width}x{img.height} image")
    x0 = int(math.floor(x))
    y0 = int(math.floor(y))
    x1 = min(x0 + 1, img.width - 1)
    y1 = min(y0 + 1, img.height - 1)
    fx = x - x0
    fy = y - y0
    p = img.pixels
    top = p[y0, x0] * (1.0 - fx) + p[y0, x1] * fx
    bot = p[y1, x0] * (1.0 - fx) + p[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def _resample_axis(n_out: int, n_in: int) -> tuple[np.ndarray, np.ndarray]:
    """Source indices and fractional weights for one axis (align corners)."""
    if n_out == 1:
        return np.zeros(1, dtype=np.intp), np.zeros(1)
    src = np.arange(n_out) * ((n_in - 1) / (n_out - 1))
    i0 = np.minimum(np.floor(src).astype(np.intp), n_in - 2) if n_in > 1 else np.zeros(n_out, dtype=np.intp)
    frac = src - i0
    return i0, frac


def rescale(img: GrayImage, factor: float, min_dim: int = 2) -> GrayImage:
    """Bilinear rescale to round(width*factor) x round(height*factor).

    Raises DegenerateOutput when either output dimension falls below
    ``min_dim`` (callers pass twice the sampling margin).
    """
    if factor <= 0:
        raise ValueError("rescale factor must be positive")
    if factor == 1.0:
        return img
    new_w = int(round(img.width * factor))
    new_h = int(round(img.height * factor))
    if new_w < min_dim or new_h < min_dim:
        raise DegenerateOutput(
            f"rescale by {factor} gives {new_w}x{new_h}, below minimum {min_dim}"
        )
    x0, fx = _resample_axis(new_w, img.width)
    y0, fy = _resample_axis(new_h, img.height)
    p = img.pixels
    x1 = np.minimum(x0 + 1, img.width - 1)
    y1 = np.minimum(y0 + 1, img.height - 1)
    fx = fx[np.newaxis, :]
    fy = fy[:, np.newaxis]
    top = p[np.ix_(y0, x0)] * (1 - fx) + p[np.ix_(y0, x1)] * fx
    bot = p[np.ix_(y1, x0)] * (1 - fx) + p[np.ix_(y1, x1)] * fx
    return GrayImage(top * (1 - fy) + bot * fy)


def rotate90(img: GrayImage, quarter_turns: int) -> GrayImage:
    """Lossless rotation by multiples of 90 degrees (pure axis swaps).

    One quarter turn maps the pixel at (x, y) to (y, width-1-x) in the
    rotated image; :func:`rotate90_point` applies the same map to
    arbitrary (possibly fractional) coordinates.
    """
    k = quarter_turns % 4
    if k == 0:
        return img
    return GrayImage(np.rot90(img.pixels, k))


def rotate90_point(x: float, y: float, width: int, height: int,
                   quarter_turns: int) -> tuple[float, float]:
    """Coordinate map matching :func:`rotate90`."""
    for _ in range(quarter_turns % 4):
        x, y = y, width - 1 - x
        width, height = height, width
    return x, y


def affine_intensity(img: GrayImage, a: float, b: float) -> GrayImage:
    """Map every pixel to a*v + b.  No clamping, so the map is invertible."""
    if a <= 0:
        raise ValueError("affine gain must be positive")
    return GrayImage(a * img.pixels + b)


@dataclass(frozen=True)
class SampleGrid:
    """Dense lattice of descriptor centers inside the margin-inset box.

    ``xs``/``ys`` are the per-axis coordinates; ``points`` enumerates the
    full lattice row-major (y outer, x inner).
    """

    xs: np.ndarray
    ys: np.ndarray
    scale_factor: float
    step: int

    @property
    def points(self) -> np.ndarray:
        gx, gy = np.meshgrid(self.xs, self.ys)
        return np.stack([gx.ravel(), gy.ravel()], axis=1)

    def __len__(self) -> int:
        return len(self.xs) * len(self.ys)


def dense_grid(img: GrayImage, step: int, margin: int,
               scale_factor: float = 1.0) -> SampleGrid:
    """Lattice points spaced ``step`` apart, inset by ``margin`` pixels.

    With margin = patch_radius + max_scale + 1 every neighbor lookup of
    every returned point is strictly in-bounds (the +1 slack covers the
    grid endpoints at width - margin).
    """
    if step < 1:
        raise ValueError("step must be >= 1")
    xs = np.arange(margin, img.width - margin + 1, step, dtype=np.int64)
    ys = np.arange(margin, img.height - margin + 1, step, dtype=np.int64)
    if len(xs) == 0 or len(ys) == 0:
        raise DegenerateOutput(
            f"margin {margin} leaves no grid points in {img.width}x{img.height}"
        )
    return SampleGrid(xs=xs, ys=ys, scale_factor=scale_factor, step=step)
