"""Local orientation adaptive texture descriptor.

Each sampled point A inside a circular patch around a center O is
described in a coordinate frame rotated to the direction O->A, so the
binary code of A's ring neighbors does not change when the image (and
patch) rotate together.  Codes are reduced to uniform bins, weighted by
a local gradient magnitude measured in the same frame, and accumulated
into a 59 x n_scales histogram which is L1-normalized and square-rooted.

The per-patch accumulation is the hot loop of the whole library; it runs
in a numba kernel over offset tables precomputed once per configuration
(all patch geometry is relative to O, so the tables are image-independent).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import (
    ConfigError,
    DegenerateInput,
    DegenerateOutput,
    NegativeEntry,
    OutOfBounds,
)
from .image import GrayImage, dense_grid, rescale
from .patterns import N_UNIFORM_BINS, UNIFORM_TABLE

log = logging.getLogger(__name__)

# Six-level pyramid: rescale factors 2^(-i/2) for i = -1 .. 4.
DEFAULT_PYRAMID_FACTORS = tuple(2.0 ** (-i / 2.0) for i in range(-1, 5))
DEFAULT_STEP = 4


@dataclass(frozen=True)
class LoadConfig:
    """Descriptor geometry.

    ``scales`` are the ring radii used for the binary codes (one 59-bin
    histogram slice per entry).  ``patch_radius`` bounds the circular
    support region; every lattice pixel inside it contributes one code
    per scale.  When ``adaptive_orientation`` is off the per-point frame
    is fixed to the image axes, which degrades the descriptor to a plain
    LBP-code histogram (kept as the rotation-sensitivity baseline).
    """

    scales: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0)
    patch_radius: float = 15.0
    neighbors: int = 8
    magnitude_radius: float = 1.0
    adaptive_orientation: bool = True

    def __post_init__(self):
        if self.neighbors != 8:
            raise ConfigError("59-bin uniform histograms require 8 neighbors")
        if len(self.scales) == 0:
            raise ConfigError("at least one scale is required")
        if any(s <= 0 for s in self.scales):
            raise ConfigError("scales must be positive")
        if list(self.scales) != sorted(set(self.scales)):
            raise ConfigError("scales must be strictly increasing")
        if self.patch_radius < max(self.scales):
            raise ConfigError("patch_radius must cover the largest scale")

    @property
    def n_scales(self) -> int:
        return len(self.scales)

    @property
    def dim(self) -> int:
        return N_UNIFORM_BINS * self.n_scales

    @property
    def margin(self) -> int:
        """Border inset guaranteeing all neighbor reads stay in-bounds."""
        reach = self.patch_radius + max(max(self.scales), self.magnitude_radius)
        return int(math.ceil(reach)) + 1


def acs_theta(o: tuple[float, float], a: tuple[float, float]) -> float:
    """Orientation of the frame at point ``a``: full-quadrant angle of o->a."""
    dx = a[0] - o[0]
    dy = a[1] - o[1]
    if dx == 0 and dy == 0:
        raise DegenerateInput("frame orientation undefined at the patch center")
    return math.atan2(dy, dx)


@dataclass(frozen=True)
class AcsFrame:
    """Per-point coordinate frame: position plus orientation toward it."""

    theta: float
    center: tuple[float, float]

    @classmethod
    def from_points(cls, o: tuple[float, float], a: tuple[float, float]) -> "AcsFrame":
        return cls(theta=acs_theta(o, a), center=(float(a[0]), float(a[1])))


def ring_offsets(theta: float, radius: float, neighbors: int = 8) -> np.ndarray:
    """(P, 2) sub-pixel offsets of the ring neighbors in the rotated frame."""
    p = np.arange(neighbors)
    ang = 2.0 * math.pi * p / neighbors - theta
    return np.stack([radius * np.cos(ang), -radius * np.sin(ang)], axis=1)


# ---------------------------------------------------------------------------
# Offset tables

def _bilinear_taps(ox: np.ndarray, oy: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integer base offsets plus 4 bilinear weights for each sub-pixel offset.

    Offsets that land exactly on the lattice are shifted one cell left/up
    with weight 1 on the far tap, so the kernel can always read a full
    2x2 block without going past the reach covered by the margin.
    """
    ix = np.floor(ox).astype(np.int64)
    iy = np.floor(oy).astype(np.int64)
    fx = ox - ix
    fy = oy - iy
    exact_x = fx < 1e-12
    ix[exact_x] -= 1
    fx = np.where(exact_x, 1.0, fx)
    exact_y = fy < 1e-12
    iy[exact_y] -= 1
    fy = np.where(exact_y, 1.0, fy)
    w = np.stack(
        [(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy], axis=-1
    )
    return ix, iy, w


@dataclass(frozen=True)
class _OffsetTables:
    """Image-independent patch geometry for one LoadConfig."""

    pdx: np.ndarray  # (N,) int lattice offsets of contributing points
    pdy: np.ndarray
    nb_ix: np.ndarray  # (N, S*8) int base offsets of code neighbors
    nb_iy: np.ndarray
    nb_w: np.ndarray  # (N, S*8, 4) bilinear weights
    mg_ix: np.ndarray  # (N, 4) magnitude taps (ring indices 0, 2, 4, 6)
    mg_iy: np.ndarray
    mg_w: np.ndarray  # (N, 4, 4)

    @property
    def n_points(self) -> int:
        return len(self.pdx)


_TABLE_CACHE: dict[tuple, _OffsetTables] = {}


def _offset_tables(cfg: LoadConfig) -> _OffsetTables:
    key = (cfg.scales, cfg.patch_radius, cfg.magnitude_radius, cfg.adaptive_orientation)
    cached = _TABLE_CACHE.get(key)
    if cached is not None:
        return cached

    r = int(math.floor(cfg.patch_radius))
    dy, dx = np.mgrid[-r : r + 1, -r : r + 1]
    mask = (dx * dx + dy * dy <= cfg.patch_radius**2) & ((dx != 0) | (dy != 0))
    pdx = dx[mask].astype(np.int64)
    pdy = dy[mask].astype(np.int64)
    theta = np.arctan2(pdy, pdx) if cfg.adaptive_orientation else np.zeros(len(pdx))

    p = np.arange(8)
    ang = 2.0 * math.pi * p[np.newaxis, :] / 8.0 - theta[:, np.newaxis]  # (N, 8)
    cos_a = np.cos(ang)
    sin_a = np.sin(ang)

    radii = np.array(cfg.scales)
    # (N, S, 8) neighbor offsets, flattened scale-major to (N, S*8).
    ox = pdx[:, None, None] + radii[None, :, None] * cos_a[:, None, :]
    oy = pdy[:, None, None] - radii[None, :, None] * sin_a[:, None, :]
    n = len(pdx)
    nb_ix, nb_iy, nb_w = _bilinear_taps(ox.reshape(n, -1), oy.reshape(n, -1))

    mr = cfg.magnitude_radius
    mg_ox = pdx[:, None] + mr * cos_a[:, ::2]
    mg_oy = pdy[:, None] - mr * sin_a[:, ::2]
    mg_ix, mg_iy, mg_w = _bilinear_taps(mg_ox, mg_oy)

    tables = _OffsetTables(pdx, pdy, nb_ix, nb_iy, nb_w, mg_ix, mg_iy, mg_w)
    _TABLE_CACHE[key] = tables
    return tables


# ---------------------------------------------------------------------------
# Accumulation kernel

@njit(cache=True, nogil=True)
def _accumulate(pix, width, gx, gy, c_off, nb_off, nb_w, mg_off, mg_w,
                uniform, n_scales, out):
    """Magnitude-weighted uniform-code histograms for every grid point.

    ``pix`` is the flat image, ``gx``/``gy`` the descriptor centers,
    ``*_off`` flat-index offsets relative to a center, ``out`` a
    (n_points, n_scales*59) array accumulated in place.
    """
    n_grid = gx.shape[0]
    n_patch = c_off.shape[0]
    for g in range(n_grid):
        base = gy[g] * width + gx[g]
        for i in range(n_patch):
            v0 = pix[base + c_off[i]]

            # All reads are interpolated as differences from the center
            # value, so equal pixels give exact zeros (a constant patch
            # must yield magnitude 0 and the all-ones code).
            m0 = 0.0
            m1 = 0.0
            m2 = 0.0
            m3 = 0.0
            for q in range(4):
                idx = base + mg_off[i, q]
                v = (mg_w[i, q, 0] * (pix[idx] - v0)
                     + mg_w[i, q, 1] * (pix[idx + 1] - v0)
                     + mg_w[i, q, 2] * (pix[idx + width] - v0)
                     + mg_w[i, q, 3] * (pix[idx + width + 1] - v0))
                if q == 0:
                    m0 = v
                elif q == 1:
                    m1 = v
                elif q == 2:
                    m2 = v
                else:
                    m3 = v
            mag = math.sqrt((m2 - m0) * (m2 - m0) + (m3 - m1) * (m3 - m1))
            if mag == 0.0:
                continue  # zero weight cannot move any bin

            for s in range(n_scales):
                code = 0
                for p in range(8):
                    j = s * 8 + p
                    idx = base + nb_off[i, j]
                    dv = (nb_w[i, j, 0] * (pix[idx] - v0)
                          + nb_w[i, j, 1] * (pix[idx + 1] - v0)
                          + nb_w[i, j, 2] * (pix[idx + width] - v0)
                          + nb_w[i, j, 3] * (pix[idx + width + 1] - v0))
                    if dv >= 0.0:
                        code |= 1 << p
                out[g, s * 59 + uniform[code]] += mag


def _flat_offsets(tables: _OffsetTables, width: int):
    c_off = tables.pdy * width + tables.pdx
    nb_off = tables.nb_iy * width + tables.nb_ix
    mg_off = tables.mg_iy * width + tables.mg_ix
    return c_off, nb_off, mg_off


def root_normalize(h: np.ndarray) -> np.ndarray:
    """L1-normalize then take elementwise square roots (unit L2 output).

    An all-zero histogram is returned unchanged; negatives are rejected.
    """
    h = np.asarray(h, dtype=np.float64)
    if np.any(h < 0):
        raise NegativeEntry("histogram entries must be non-negative")
    total = h.sum()
    if total == 0:
        return h.copy()
    return np.sqrt(h / total)


def _accumulate_at(img: GrayImage, xs: np.ndarray, ys: np.ndarray,
                   cfg: LoadConfig, table: np.ndarray) -> np.ndarray:
    """Raw (unnormalized) histograms for descriptor centers at lattice points."""
    tables = _offset_tables(cfg)
    c_off, nb_off, mg_off = _flat_offsets(tables, img.width)
    out = np.zeros((len(xs), cfg.dim), dtype=np.float64)
    _accumulate(
        img.pixels.ravel(), img.width,
        np.ascontiguousarray(xs, dtype=np.int64),
        np.ascontiguousarray(ys, dtype=np.int64),
        c_off, nb_off, tables.nb_w, mg_off, tables.mg_w,
        table, cfg.n_scales, out,
    )
    return out


def _check_center(img: GrayImage, x: int, y: int, cfg: LoadConfig) -> None:
    m = cfg.margin - 1  # actual reach; margin carries one pixel of slack
    if not (m <= x <= img.width - 1 - m and m <= y <= img.height - 1 - m):
        raise OutOfBounds(
            f"patch at ({x}, {y}) reaches outside {img.width}x{img.height} image"
        )


def _sample_diff(img: GrayImage, x: float, y: float, v0: float) -> float:
    """Bilinear read of (pixel - v0): exact zero where the patch is flat."""
    if not (0.0 <= x <= img.width - 1 and 0.0 <= y <= img.height - 1):
        raise OutOfBounds(f"({x}, {y}) outside {img.width}x{img.height} image")
    x0 = int(math.floor(x))
    y0 = int(math.floor(y))
    x1 = min(x0 + 1, img.width - 1)
    y1 = min(y0 + 1, img.height - 1)
    fx = x - x0
    fy = y - y0
    p = img.pixels
    top = (p[y0, x0] - v0) * (1.0 - fx) + (p[y0, x1] - v0) * fx
    bot = (p[y1, x0] - v0) * (1.0 - fx) + (p[y1, x1] - v0) * fx
    return top * (1.0 - fy) + bot * fy


def load_code(img: GrayImage, frame: AcsFrame, scale: float,
              neighbors: int = 8) -> int:
    """Binary code of the frame's point at the given ring radius.

    Reference scalar path (the dense kernel is the fast one); neighbors
    are read bilinearly at the rotated ring positions.
    """
    from .image import sample_bilinear

    xa, ya = frame.center
    va = sample_bilinear(img, xa, ya)
    code = 0
    for p, (dx, dy) in enumerate(ring_offsets(frame.theta, scale, neighbors)):
        if _sample_diff(img, xa + dx, ya + dy, va) >= 0.0:
            code |= 1 << p
    return code


def adaptive_magnitude(img: GrayImage, frame: AcsFrame,
                       radius: float = 1.0) -> float:
    """Gradient magnitude at the frame's point.

    Euclidean norm of the two diametric differences on the unit ring
    (neighbor pairs 4-0 and 6-2), measured in the rotated frame.
    """
    from .image import sample_bilinear

    xa, ya = frame.center
    va = sample_bilinear(img, xa, ya)
    offs = ring_offsets(frame.theta, radius)
    v = [_sample_diff(img, xa + dx, ya + dy, va) for dx, dy in offs]
    return math.hypot(v[4] - v[0], v[6] - v[2])


def extract(img: GrayImage, center: tuple[int, int],
            cfg: LoadConfig = LoadConfig(),
            table: np.ndarray = UNIFORM_TABLE) -> np.ndarray:
    """Normalized descriptor for a single patch center (lattice point)."""
    x, y = int(center[0]), int(center[1])
    _check_center(img, x, y, cfg)
    tables = _offset_tables(cfg)
    if tables.n_points < 8:
        raise DegenerateInput("patch contains fewer than 8 contributing points")
    raw = _accumulate_at(img, np.array([x]), np.array([y]), cfg, table)
    return root_normalize(raw[0])


def extract_at_points(img: GrayImage, points: np.ndarray,
                      cfg: LoadConfig = LoadConfig(),
                      table: np.ndarray = UNIFORM_TABLE) -> np.ndarray:
    """Normalized descriptors for an explicit list of lattice centers."""
    pts = np.asarray(points, dtype=np.int64)
    for x, y in pts:
        _check_center(img, int(x), int(y), cfg)
    raw = _accumulate_at(img, pts[:, 0], pts[:, 1], cfg, table)
    return np.stack([root_normalize(r) for r in raw]) if len(raw) else raw


def extract_dense(img: GrayImage, cfg: LoadConfig = LoadConfig(),
                  step: int = DEFAULT_STEP,
                  pyramid_factors: tuple[float, ...] = (1.0,),
                  table: np.ndarray = UNIFORM_TABLE) -> np.ndarray:
    """Descriptors on a dense grid at every usable pyramid level.

    Levels too small to host a single grid point are skipped with a
    warning.  Returns an (n_descriptors, dim) array ordered by pyramid
    level then row-major grid position.
    """
    margin = cfg.margin
    chunks = []
    for factor in pyramid_factors:
        try:
            level = rescale(img, factor, min_dim=2 * margin)
            grid = dense_grid(level, step, margin, scale_factor=factor)
        except DegenerateOutput:
            log.warning("pyramid level %.4f too small for %dx%d image, skipped",
                        factor, img.width, img.height)
            continue
        pts = grid.points
        raw = _accumulate_at(level, pts[:, 0], pts[:, 1], cfg, table)
        chunks.append(np.stack([root_normalize(r) for r in raw]))
    if not chunks:
        raise DegenerateOutput("no pyramid level admits a sample point")
    return np.concatenate(chunks, axis=0)


def dense_descriptor_count(img: GrayImage, cfg: LoadConfig,
                           step: int, pyramid_factors: tuple[float, ...]) -> int:
    """Number of descriptors extract_dense will produce (grid arithmetic only)."""
    margin = cfg.margin
    total = 0
    for factor in pyramid_factors:
        w = int(round(img.width * factor)) if factor != 1.0 else img.width
        h = int(round(img.height * factor)) if factor != 1.0 else img.height
        if w < 2 * margin or h < 2 * margin:
            continue
        nx = (w - 2 * margin) // step + 1
        ny = (h - 2 * margin) // step + 1
        if nx > 0 and ny > 0:
            total += nx * ny
    return total
