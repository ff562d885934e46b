"""Binary-pattern machinery shared by the LBP baseline and the adaptive descriptor.

Covers sign thresholding, the circular transition count, the 59-bin
uniform-pattern table for P=8, and the classic (non-adaptive) LBP
operator with its normalized histogram.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateOutput
from .image import GrayImage, sample_bilinear

N_UNIFORM_BINS = 59  # 58 uniform patterns + one catch-all


@dataclass(frozen=True)
class PatternConfig:
    """Neighborhood shape for binary-pattern operators."""

    P: int = 8
    R: float = 1.0

    def __post_init__(self):
        if not 4 <= self.P <= 24:
            raise ConfigError(f"neighbor count P={self.P} outside [4, 24]")
        if self.R <= 0:
            raise ConfigError("radius R must be positive")


def sign_threshold(t: float) -> int:
    """1 for t >= 0, else 0 (ties count as 'not darker')."""
    return 1 if t >= 0 else 0


def transitions(pattern: int) -> int:
    """Circular count of 0/1 changes in an 8-bit code (bit 8 wraps to bit 0)."""
    if not 0 <= pattern <= 255:
        raise ValueError("pattern must be an 8-bit code")
    rotated = ((pattern << 1) | (pattern >> 7)) & 0xFF
    return bin(pattern ^ rotated).count("1")


def build_uniform_table() -> np.ndarray:
    """256-entry map from 8-bit code to uniform bin.

    Bins 0-57 are assigned to the 58 uniform patterns (transitions <= 2)
    in ascending numeric order of the code; bin 58 collects everything
    else.  The assignment is fixed, so histograms are comparable across
    runs and machines.
    """
    table = np.full(256, N_UNIFORM_BINS - 1, dtype=np.int64)
    next_bin = 0
    for code in range(256):
        if transitions(code) <= 2:
            table[code] = next_bin
            next_bin += 1
    assert next_bin == 58
    return table


UNIFORM_TABLE = build_uniform_table()
UNIFORM_TABLE.flags.writeable = False


def uniform_index(pattern: int, table: np.ndarray = UNIFORM_TABLE) -> int:
    if not 0 <= pattern <= 255:
        raise ValueError("pattern must be an 8-bit code")
    return int(table[pattern])


def neighbor_offsets(cfg: PatternConfig) -> np.ndarray:
    """(P, 2) array of (dx, dy) offsets; neighbor 0 at angle 0, y downward."""
    angles = 2.0 * math.pi * np.arange(cfg.P) / cfg.P
    return np.stack([cfg.R * np.cos(angles), -cfg.R * np.sin(angles)], axis=1)


def lbp_code(img: GrayImage, center: tuple[float, float],
             cfg: PatternConfig = PatternConfig()) -> int:
    """Classic LBP code at a point, neighbors sampled bilinearly."""
    xc, yc = center
    gc = sample_bilinear(img, xc, yc)
    code = 0
    for p, (dx, dy) in enumerate(neighbor_offsets(cfg)):
        gp = sample_bilinear(img, xc + dx, yc + dy)
        code |= sign_threshold(gp - gc) << p
    return code


def _lbp_codes_dense(img: GrayImage, cfg: PatternConfig) -> np.ndarray:
    """Vectorized LBP codes for every pixel whose ring is in-bounds."""
    m = int(math.ceil(cfg.R))
    h, w = img.height, img.width
    if h <= 2 * m or w <= 2 * m:
        raise DegenerateOutput(f"image {w}x{h} too small for radius {cfg.R}")
    p = img.pixels
    center = p[m : h - m, m : w - m]
    codes = np.zeros(center.shape, dtype=np.int64)
    def shifted(oy, ox):
        # Shifted-slice view of the interior; |ox|, |oy| <= m by construction.
        return p[m + oy : h - m + oy, m + ox : w - m + ox]

    for i, (dx, dy) in enumerate(neighbor_offsets(cfg)):
        x0 = int(math.floor(dx))
        y0 = int(math.floor(dy))
        fx = dx - x0
        fy = dy - y0
        # Interpolate the difference from the center, not the raw value:
        # equal pixels then give an exact zero regardless of weight rounding.
        diff = np.zeros_like(center)
        for oy, wy in ((y0, 1 - fy), (y0 + 1, fy)):
            if wy == 0:
                continue
            for ox, wx in ((x0, 1 - fx), (x0 + 1, fx)):
                if wx == 0:
                    continue
                diff += wx * wy * (shifted(oy, ox) - center)
        codes |= (diff >= 0).astype(np.int64) << i
    return codes


def lbp_histogram(img: GrayImage, cfg: PatternConfig = PatternConfig(),
                  table: np.ndarray = UNIFORM_TABLE) -> np.ndarray:
    """L1-normalized 59-bin uniform-LBP histogram over all valid pixels."""
    if cfg.P != 8:
        raise ConfigError("the 59-bin uniform histogram requires P=8")
    codes = _lbp_codes_dense(img, cfg)
    bins = table[codes.ravel()]
    hist = np.bincount(bins, minlength=N_UNIFORM_BINS).astype(np.float64)
    return hist / hist.sum()
