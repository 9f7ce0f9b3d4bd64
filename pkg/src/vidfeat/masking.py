"""Detection masks and feature propagation.

Two mask builders: thresholded absolute difference of co-located pyramid
layers from consecutive frames (detect where the content changed), and a
thresholded spatial histogram of the previous frame's keypoints (detect
where features were). Subsampled masks are upsampled to frame resolution by
block replication; the merge step keeps newly detected features where the
mask is 1 and propagates previous features where it is 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .detector import Keypoint
from .pyramid import GrayFrame

log = logging.getLogger(__name__)

DETECTED = "detected"
PROPAGATED = "propagated"

DEFAULT_INTENSITY_THRESHOLD = 20.0  # operating point used throughout the benchmarks
DEFAULT_BINNING_GRID = (16, 16)


@dataclass(frozen=True, eq=False)
class DetectionMask:
    """Full-frame binary grid; detection runs only where bits are 1."""

    bits: np.ndarray  # (h, w) uint8 in {0, 1}

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def coverage(self) -> float:
        return float(self.bits.mean())


@dataclass(frozen=True, eq=False)
class SubsampledMask:
    """Cell-resolution mask; cell size in pixels is bound when known."""

    bits: np.ndarray  # (rows, cols) uint8 in {0, 1}
    cell_w: int | None = None
    cell_h: int | None = None


@dataclass(frozen=True, eq=False, slots=True)
class Feature:
    kp: Keypoint
    desc: np.ndarray  # 512-element 0/1 uint8 vector
    origin: str = DETECTED
    age: int = 0


@dataclass(frozen=True)
class MaskConfig:
    mode: str = "none"  # none | intensity | binning | temporal
    t_i: float = DEFAULT_INTENSITY_THRESHOLD
    t_h: int = 1
    grid: tuple[int, int] = DEFAULT_BINNING_GRID  # (rows, cols)
    octave_for_mask: int | None = None  # None = top octave
    per_layer: bool = False  # one mask per octave instead of a single mask

    def __post_init__(self):
        if self.mode not in ("none", "intensity", "binning", "temporal"):
            raise ValueError(f"unknown mask mode {self.mode!r}")
        if self.t_h < 0:
            raise ValueError("histogram threshold must be >= 0")
        if self.grid[0] < 1 or self.grid[1] < 1:
            raise ValueError("binning grid must be at least 1x1")


def intensity_diff_mask(
    prev_layer: GrayFrame, cur_layer: GrayFrame, t_i: float
) -> SubsampledMask:
    """Cell (k,l) = 1 iff |cur - prev| > t_i at that layer pixel."""
    if prev_layer.data.shape != cur_layer.data.shape:
        raise ValueError(
            f"layer dimensions differ: {prev_layer.data.shape} vs {cur_layer.data.shape}"
        )
    diff = np.abs(cur_layer.data.astype(np.int16) - prev_layer.data.astype(np.int16))
    return SubsampledMask((diff > t_i).astype(np.uint8))


def binning_histogram(
    features: list[Feature], frame_dims: tuple[int, int], grid: tuple[int, int]
) -> np.ndarray:
    """(rows, cols) spatial histogram of keypoint positions.

    Cell sizes use ceiling division so edge bins shrink rather than leaving
    pixels unassigned; out-of-frame keypoints clamp to the nearest edge bin.
    """
    w, h = frame_dims
    rows, cols = grid
    sx = -(-w // cols)
    sy = -(-h // rows)
    hist = np.zeros((rows, cols), np.int64)
    if not features:
        return hist
    xs = np.array([f.kp.x for f in features])
    ys = np.array([f.kp.y for f in features])
    out_of_frame = int(((xs < 0) | (xs >= w) | (ys < 0) | (ys >= h)).sum())
    if out_of_frame:
        log.warning("%d features outside frame clamped to edge bins", out_of_frame)
    ks = np.clip(np.floor(xs / sx).astype(np.int64), 0, cols - 1)
    ls = np.clip(np.floor(ys / sy).astype(np.int64), 0, rows - 1)
    np.add.at(hist, (ls, ks), 1)
    return hist


def keypoint_binning_mask(
    prev_features: list[Feature],
    frame_dims: tuple[int, int],
    grid: tuple[int, int],
    t_h: int,
) -> SubsampledMask:
    """Cell = 1 iff the previous frame put at least t_h keypoints in it."""
    w, h = frame_dims
    rows, cols = grid
    hist = binning_histogram(prev_features, frame_dims, grid)
    return SubsampledMask(
        (hist >= t_h).astype(np.uint8),
        cell_w=-(-w // cols),
        cell_h=-(-h // rows),
    )


def upsample_mask(m: SubsampledMask, target: tuple[int, int]) -> DetectionMask:
    """Block replication: pixel (x,y) takes cell (x // cell_w, y // cell_h)."""
    w, h = target
    rows, cols = m.bits.shape
    cell_w = m.cell_w if m.cell_w is not None else -(-w // cols)
    cell_h = m.cell_h if m.cell_h is not None else -(-h // rows)
    if cell_w * cols < w or cell_h * rows < h:
        raise ValueError("mask cell geometry does not cover the target frame")
    full = np.repeat(np.repeat(m.bits, cell_h, axis=0), cell_w, axis=1)
    return DetectionMask(np.ascontiguousarray(full[:h, :w]))


def _mask_at(mask: DetectionMask, x: float, y: float) -> int:
    xi = min(max(int(np.floor(x + 0.5)), 0), mask.width - 1)
    yi = min(max(int(np.floor(y + 0.5)), 0), mask.height - 1)
    return int(mask.bits[yi, xi])


def _mask_values(mask: DetectionMask, feats: list[Feature]) -> np.ndarray:
    """Mask bit under each feature's rounded, clamped position."""
    if not feats:
        return np.zeros(0, np.uint8)
    xs = np.array([f.kp.x for f in feats])
    ys = np.array([f.kp.y for f in feats])
    xi = np.clip(np.floor(xs + 0.5).astype(np.int64), 0, mask.width - 1)
    yi = np.clip(np.floor(ys + 0.5).astype(np.int64), 0, mask.height - 1)
    return mask.bits[yi, xi]


def merge_features(
    detected: list[Feature], prev: list[Feature], mask: DetectionMask
) -> list[Feature]:
    """Detected features where the mask is 1, previous features where it is 0.

    Propagated features keep position, sigma, theta and descriptor; their age
    increments and their origin flips to 'propagated'.
    """
    dm = _mask_values(mask, detected)
    pm = _mask_values(mask, prev)
    out = [d for d, v in zip(detected, dm) if v == 1]
    out.extend(
        replace(p, origin=PROPAGATED, age=p.age + 1)
        for p, v in zip(prev, pm)
        if v == 0
    )
    return out


def write_mask_pgm(mask: DetectionMask, path) -> None:
    """Debug dump: binary PGM, 0/255 per pixel."""
    data = (mask.bits * np.uint8(255)).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (mask.width, mask.height))
        f.write(data.tobytes())
