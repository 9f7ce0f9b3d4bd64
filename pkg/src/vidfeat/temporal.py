"""Temporally coherent baseline: keypoint propagation by SAD block matching.

A full detector runs on the first frame of every GOP; in between, each
feature's 16x16 patch is chased through the next frame with a two-stage
spiral search (integer offsets at stride 2, then quarter-pixel bilinear
refinement). A visited SAD below the early-termination threshold is accepted
immediately; the final best must beat the match threshold or the feature is
dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import accel
from .masking import PROPAGATED, Feature
from .pyramid import GrayFrame


@dataclass(frozen=True)
class GopConfig:
    delta: int = 10  # GOP length
    patch: int = 16  # patch side length, pixels
    t_bm: float = 1800.0  # SAD accept threshold
    t_et: float = 1000.0  # early-termination SAD threshold
    coarse_window: float = 12.0  # search extends +/- this many pixels
    coarse_step: float = 2.0
    fine_window: float = 1.75  # refinement extends +/- this around the coarse winner
    fine_step: float = 0.25

    def __post_init__(self):
        if self.delta < 1:
            raise ValueError("GOP length must be >= 1")
        if self.patch % 2 != 0 or self.patch < 2:
            raise ValueError("patch side must be even and positive")
        if self.fine_step > self.coarse_step:
            raise ValueError("fine_step must not exceed coarse_step")
        if self.t_bm <= 0 or self.t_et <= 0:
            raise ValueError("SAD thresholds must be positive")


def spiral_offsets(radius: float, step: float) -> np.ndarray:
    """Grid offsets within +/-radius at the given step, center outward.

    Rings are ordered by Chebyshev distance; within a ring, points walk
    counterclockwise from the +x axis. Visits every grid offset exactly once.
    """
    n = int(math.floor(radius / step + 1e-9))
    vals = step * np.arange(-n, n + 1)
    ox, oy = np.meshgrid(vals, vals)
    ox = ox.ravel()
    oy = oy.ravel()
    cheb = np.maximum(np.abs(ox), np.abs(oy))
    ang = np.arctan2(oy, ox)
    ang = np.where(ang < -1e-12, ang + 2.0 * np.pi, ang)
    order = np.lexsort((ang, cheb))
    return np.stack([ox[order], oy[order]], axis=1)


def sad_block(a: np.ndarray, b: np.ndarray) -> int:
    """Sum of absolute pixel differences between two equal-size patches."""
    if a.shape != b.shape:
        raise ValueError(f"patch dimensions differ: {a.shape} vs {b.shape}")
    return int(np.abs(a.astype(np.int64) - b.astype(np.int64)).sum())


def _coarse_search_np(patch, frame, base_x, base_y, offs, t_et):
    ph, pw = patch.shape
    h, w = frame.shape
    p = patch.astype(np.int64)
    best_sad = np.int64(1) << 60
    best_k = -1
    for k in range(offs.shape[0]):
        tlx = base_x + int(offs[k, 0])
        tly = base_y + int(offs[k, 1])
        if tlx < 0 or tly < 0 or tlx + pw > w or tly + ph > h:
            continue
        cand = frame[tly : tly + ph, tlx : tlx + pw].astype(np.int64)
        sad = int(np.abs(p - cand).sum())
        if sad < best_sad:
            best_sad = sad
            best_k = k
            if sad < t_et:
                return best_k, int(best_sad), True
    return best_k, int(best_sad), False


def _fine_search_np(patch, frame, base_x, base_y, offs, t_et, init_sad):
    ph, pw = patch.shape
    h, w = frame.shape
    p = patch.astype(np.float64)
    best_sad = float(init_sad)
    best_k = -1
    ys = np.arange(ph)[:, None]
    xs = np.arange(pw)[None, :]
    for k in range(offs.shape[0]):
        fx = base_x + offs[k, 0]
        fy = base_y + offs[k, 1]
        ix = int(np.floor(fx))
        iy = int(np.floor(fy))
        if ix < 0 or iy < 0 or ix + pw >= w or iy + ph >= h:
            continue
        ax = fx - ix
        ay = fy - iy
        block = frame[iy : iy + ph + 1, ix : ix + pw + 1].astype(np.float64)
        v = (
            (1 - ax) * (1 - ay) * block[ys, xs]
            + ax * (1 - ay) * block[ys, xs + 1]
            + (1 - ax) * ay * block[ys + 1, xs]
            + ax * ay * block[ys + 1, xs + 1]
        )
        sad = float(np.abs(p - v).sum())
        if sad < best_sad:
            best_sad = sad
            best_k = k
            if sad < t_et:
                return best_k, best_sad, True
    return best_k, best_sad, False


if accel.NUMBA_AVAILABLE:
    from numba import njit

    @njit(cache=True)
    def _coarse_search_jit(patch, frame, base_x, base_y, offs, t_et):  # pragma: no cover
        ph, pw = patch.shape
        h, w = frame.shape
        best_sad = np.int64(1) << 60
        best_k = -1
        for k in range(offs.shape[0]):
            tlx = base_x + np.int64(offs[k, 0])
            tly = base_y + np.int64(offs[k, 1])
            if tlx < 0 or tly < 0 or tlx + pw > w or tly + ph > h:
                continue
            sad = np.int64(0)
            abandoned = False
            for r in range(ph):
                for c in range(pw):
                    sad += abs(np.int64(patch[r, c]) - np.int64(frame[tly + r, tlx + c]))
                if sad >= best_sad:
                    abandoned = True
                    break
            if abandoned:
                continue
            best_sad = sad
            best_k = k
            if sad < t_et:
                return best_k, best_sad, True
        return best_k, best_sad, False

    @njit(cache=True)
    def _fine_search_jit(patch, frame, base_x, base_y, offs, t_et, init_sad):  # pragma: no cover
        ph, pw = patch.shape
        h, w = frame.shape
        best_sad = init_sad
        best_k = -1
        for k in range(offs.shape[0]):
            fx = base_x + offs[k, 0]
            fy = base_y + offs[k, 1]
            ix = np.int64(np.floor(fx))
            iy = np.int64(np.floor(fy))
            if ix < 0 or iy < 0 or ix + pw >= w or iy + ph >= h:
                continue
            ax = fx - ix
            ay = fy - iy
            w00 = (1.0 - ax) * (1.0 - ay)
            w10 = ax * (1.0 - ay)
            w01 = (1.0 - ax) * ay
            w11 = ax * ay
            sad = 0.0
            abandoned = False
            for r in range(ph):
                for c in range(pw):
                    v = (
                        w00 * frame[iy + r, ix + c]
                        + w10 * frame[iy + r, ix + c + 1]
                        + w01 * frame[iy + r + 1, ix + c]
                        + w11 * frame[iy + r + 1, ix + c + 1]
                    )
                    sad += abs(patch[r, c] - v)
                if sad >= best_sad:
                    abandoned = True
                    break
            if abandoned:
                continue
            best_sad = sad
            best_k = k
            if sad < t_et:
                return best_k, best_sad, True
        return best_k, best_sad, False

    @accel.register_warmup
    def _warm_search():
        p = np.zeros((4, 4), np.uint8)
        f = np.zeros((16, 16), np.uint8)
        offs = np.zeros((1, 2), np.float64)
        _coarse_search_jit(p, f, 4, 4, offs, 1.0)
        _fine_search_jit(p, f, 4.0, 4.0, offs + 0.25, 1.0, 10.0)


def _coarse_search(patch, frame, base_x, base_y, offs, t_et):
    if accel.USE_NUMBA:
        k, sad, early = _coarse_search_jit(patch, frame, base_x, base_y, offs, t_et)
        return int(k), int(sad), bool(early)
    return _coarse_search_np(patch, frame, base_x, base_y, offs, t_et)


def _fine_search(patch, frame, base_x, base_y, offs, t_et, init_sad):
    if accel.USE_NUMBA:
        k, sad, early = _fine_search_jit(patch, frame, base_x, base_y, offs, t_et, init_sad)
        return int(k), float(sad), bool(early)
    return _fine_search_np(patch, frame, base_x, base_y, offs, t_et, init_sad)


_offset_cache: dict[tuple[float, float], np.ndarray] = {}


def _cached_offsets(radius: float, step: float) -> np.ndarray:
    key = (radius, step)
    if key not in _offset_cache:
        _offset_cache[key] = spiral_offsets(radius, step)
    return _offset_cache[key]


def spiral_search(
    prev_patch: np.ndarray,
    cur_frame: GrayFrame,
    center: tuple[float, float],
    cfg: GopConfig,
):
    """Locate prev_patch in cur_frame around center.

    Returns ((x, y), sad) for the best match when its SAD beats t_bm, else
    None. Candidate windows that leave the frame are clipped from the search;
    ties keep the first-visited offset, and the coarse winner stays the
    incumbent unless a refinement candidate is strictly better.
    """
    ph, pw = prev_patch.shape
    prev_patch = np.ascontiguousarray(prev_patch)
    cxi = int(math.floor(center[0] + 0.5))
    cyi = int(math.floor(center[1] + 0.5))
    base_x = cxi - pw // 2
    base_y = cyi - ph // 2

    coarse = _cached_offsets(cfg.coarse_window, cfg.coarse_step)
    k, sad, early = _coarse_search(
        prev_patch, cur_frame.data, base_x, base_y, coarse, float(cfg.t_et)
    )
    if k < 0:
        return None
    ox, oy = float(coarse[k, 0]), float(coarse[k, 1])
    best = float(sad)
    if not early:
        fine = _cached_offsets(cfg.fine_window, cfg.fine_step)[1:]  # skip (0, 0)
        fk, fsad, _ = _fine_search(
            prev_patch, cur_frame.data, base_x + ox, base_y + oy,
            fine, float(cfg.t_et), best,
        )
        if fk >= 0:
            ox += float(fine[fk, 0])
            oy += float(fine[fk, 1])
            best = float(fsad)
    if best >= cfg.t_bm:
        return None
    return (cxi + ox, cyi + oy), best


def baseline_step(
    prev_features: list[Feature],
    prev_frame: GrayFrame | None,
    cur_frame: GrayFrame,
    frame_index: int,
    cfg: GopConfig,
    detector,
    descriptor,
) -> list[Feature]:
    """One frame of the baseline: full detection at GOP starts, block
    matching elsewhere.

    ``detector(frame) -> list[Keypoint]`` and
    ``descriptor(frame, keypoints) -> list[Feature]`` supply the full path.
    Off GOP boundaries, unmatched features are dropped and matched ones move
    to the found position with descriptor, sigma and theta unchanged.
    """
    if frame_index % cfg.delta == 0 or prev_frame is None:
        return descriptor(cur_frame, detector(cur_frame))
    half = cfg.patch // 2
    h, w = prev_frame.data.shape
    out: list[Feature] = []
    for f in prev_features:
        cxi = int(math.floor(f.kp.x + 0.5))
        cyi = int(math.floor(f.kp.y + 0.5))
        tlx = cxi - half
        tly = cyi - half
        if tlx < 0 or tly < 0 or tlx + cfg.patch > w or tly + cfg.patch > h:
            continue
        patch = prev_frame.data[tly : tly + cfg.patch, tlx : tlx + cfg.patch]
        found = spiral_search(patch, cur_frame, (f.kp.x, f.kp.y), cfg)
        if found is None:
            continue
        (nx, ny), _ = found
        out.append(
            replace(f, kp=replace(f.kp, x=nx, y=ny), origin=PROPAGATED, age=f.age + 1)
        )
    return out
