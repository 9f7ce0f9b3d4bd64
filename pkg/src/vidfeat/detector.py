"""Segment-test corner detection with scale-space NMS and refinement.

A pixel's saliency score is the largest threshold t at which 9 contiguous
pixels of its radius-3 Bresenham circle are all brighter than center+t or
all darker than center-t (0 when no t >= 1 qualifies). Detection can be
gated by a full-resolution binary mask; gated-out pixels are never scored
and contribute score 0 to the NMS neighborhoods of their neighbors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import accel
from .pyramid import GrayFrame, ScaleSpacePyramid

# Radius-3 Bresenham circle, 16 (dx, dy) offsets, clockwise from (0, -3).
CIRCLE = np.array(
    [
        (0, -3), (1, -3), (2, -2), (3, -1),
        (3, 0), (3, 1), (2, 2), (1, 3),
        (0, 3), (-1, 3), (-2, 2), (-3, 1),
        (-3, 0), (-3, -1), (-2, -2), (-1, -3),
    ],
    dtype=np.int64,
)
_CX = np.ascontiguousarray(CIRCLE[:, 0])
_CY = np.ascontiguousarray(CIRCLE[:, 1])

DEFAULT_THRESHOLD = 55  # detection threshold for tracking-style runs
RETRIEVAL_THRESHOLD = 70  # detection threshold for retrieval-style runs


@dataclass(frozen=True, slots=True)
class Candidate:
    x: int
    y: int
    layer_id: tuple[str, int]
    score: int


@dataclass(frozen=True, slots=True)
class Keypoint:
    """Sub-pixel keypoint in original-frame coordinates.

    theta stays 0.0 until the descriptor stage assigns an orientation.
    """

    x: float
    y: float
    sigma: float
    theta: float = 0.0
    score: float = 0.0


def ast_corner_score(layer: GrayFrame, x: int, y: int, arc_len: int = 9) -> int:
    """Largest integer t with arc_len contiguous circle pixels all > c+t or all < c-t."""
    h, w = layer.data.shape
    if not (3 <= x < w - 3 and 3 <= y < h - 3):
        raise ValueError(f"({x}, {y}) is within 3 pixels of the layer border")
    c = int(layer.data[y, x])
    d = np.array(
        [int(layer.data[y + dy, x + dx]) - c for dx, dy in CIRCLE], dtype=np.int64
    )
    best = 0
    for start in range(16):
        idx = (start + np.arange(arc_len)) % 16
        best = max(best, int(d[idx].min()) - 1, int((-d[idx]).min()) - 1)
    return max(best, 0)


def _circular_window_max_min(diffs: np.ndarray) -> np.ndarray:
    """max over the 16 arc starts of (min over 9 consecutive diffs)."""
    ext = np.concatenate([diffs, diffs[:8]], axis=0)
    m2 = np.minimum(ext[:-1], ext[1:])
    m4 = np.minimum(m2[:-2], m2[2:])
    m8 = np.minimum(m4[:-4], m4[4:])
    m9 = np.minimum(m8[:16], ext[8:24])
    return m9.max(axis=0).astype(np.int32)


def _score_map_np(data: np.ndarray, t: int, mask: np.ndarray) -> np.ndarray:
    scores = np.zeros(data.shape, np.int32)
    h, w = data.shape
    if h < 7 or w < 7:
        return scores
    center = data[3 : h - 3, 3 : w - 3].astype(np.int16)
    diffs = np.empty((16, h - 6, w - 6), np.int16)
    for k in range(16):
        dx, dy = int(_CX[k]), int(_CY[k])
        diffs[k] = data[3 + dy : h - 3 + dy, 3 + dx : w - 3 + dx].astype(np.int16)
        diffs[k] -= center
    s = np.maximum(_circular_window_max_min(diffs), _circular_window_max_min(-diffs))
    s -= 1
    np.maximum(s, 0, out=s)
    s[s < t] = 0
    s[mask[3 : h - 3, 3 : w - 3] == 0] = 0
    scores[3 : h - 3, 3 : w - 3] = s
    return scores


if accel.NUMBA_AVAILABLE:
    from numba import njit

    @njit(cache=True, nogil=True)
    def _score_map_jit(data, t, mask, cx, cy):  # pragma: no cover - jitted
        h, w = data.shape
        scores = np.zeros((h, w), np.int32)
        d = np.empty(16, np.int64)
        for y in range(3, h - 3):
            for x in range(3, w - 3):
                if mask[y, x] == 0:
                    continue
                c = np.int64(data[y, x])
                d0 = np.int64(data[y - 3, x]) - c
                d8 = np.int64(data[y + 3, x]) - c
                d4 = np.int64(data[y, x + 3]) - c
                d12 = np.int64(data[y, x - 3]) - c
                # any 9-long arc contains one of {0, 8} and one of {4, 12}
                bright_ok = (d0 > t or d8 > t) and (d4 > t or d12 > t)
                dark_ok = (d0 < -t or d8 < -t) and (d4 < -t or d12 < -t)
                if not (bright_ok or dark_ok):
                    continue
                for k in range(16):
                    d[k] = np.int64(data[y + cy[k], x + cx[k]]) - c
                best = np.int64(0)
                if bright_ok:
                    for s0 in range(16):
                        if d[s0] <= best:
                            continue
                        m = d[s0]
                        for k in range(1, 9):
                            v = d[(s0 + k) & 15]
                            if v < m:
                                m = v
                                if m <= best:
                                    break
                        if m > best:
                            best = m
                if dark_ok:
                    for s0 in range(16):
                        if -d[s0] <= best:
                            continue
                        m = -d[s0]
                        for k in range(1, 9):
                            v = -d[(s0 + k) & 15]
                            if v < m:
                                m = v
                                if m <= best:
                                    break
                        if m > best:
                            best = m
                score = best - 1
                if score >= t:
                    scores[y, x] = np.int32(score)
        return scores

    @accel.register_warmup
    def _warm_score_map():
        tiny = np.zeros((8, 8), np.uint8)
        _score_map_jit(tiny, 1, np.ones((8, 8), np.uint8), _CX, _CY)


def _score_map(data: np.ndarray, t: int, mask: np.ndarray | None) -> np.ndarray:
    """Saliency map: score where score >= t (and mask is 1), else 0."""
    if mask is None:
        mask = np.ones(data.shape, np.uint8)
    if accel.USE_NUMBA:
        return _score_map_jit(data, t, np.ascontiguousarray(mask), _CX, _CY)
    return _score_map_np(data, t, mask)


def _project_mask(mask_bits: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Sample a full-resolution mask at a layer's resolution (floor mapping)."""
    h, w = shape
    mh, mw = mask_bits.shape
    ys = (np.arange(h) * mh) // h
    xs = (np.arange(w) * mw) // w
    return np.ascontiguousarray(mask_bits[np.ix_(ys, xs)])


def detect_candidates(
    layer: GrayFrame,
    t: int,
    mask=None,
    layer_id: tuple[str, int] = ("octave", 0),
) -> list[Candidate]:
    """All pixels with corner score >= t whose mapped mask entry is 1.

    ``mask`` is a full-resolution DetectionMask (or None for no gating);
    layer coordinates map to mask coordinates by the dimension ratio.
    """
    if t < 1:
        raise ValueError("detection threshold must be >= 1")
    layer_mask = None
    if mask is not None:
        layer_mask = _project_mask(mask.bits, layer.data.shape)
    smap = _score_map(layer.data, int(t), layer_mask)
    ys, xs = np.nonzero(smap)
    return [
        Candidate(int(x), int(y), layer_id, int(smap[y, x])) for y, x in zip(ys, xs)
    ]


def _fit_quadratic_peak(patches: np.ndarray):
    """Vectorized 2-D quadratic fit on (n, 3, 3) score patches.

    Returns (ox, oy, value, ok). Non-negative-curvature fits and offsets
    leaving the unit cell are degenerate: offset (0, 0), value = center.
    """
    p = patches.astype(np.float64)
    gx = 0.5 * (p[:, 1, 2] - p[:, 1, 0])
    gy = 0.5 * (p[:, 2, 1] - p[:, 0, 1])
    dxx = p[:, 1, 2] - 2.0 * p[:, 1, 1] + p[:, 1, 0]
    dyy = p[:, 2, 1] - 2.0 * p[:, 1, 1] + p[:, 0, 1]
    dxy = 0.25 * (p[:, 2, 2] - p[:, 2, 0] - p[:, 0, 2] + p[:, 0, 0])
    det = dxx * dyy - dxy * dxy
    ok = (dxx < 0.0) & (det > 0.0)
    safe = np.where(ok, det, 1.0)
    ox = np.where(ok, -(dyy * gx - dxy * gy) / safe, 0.0)
    oy = np.where(ok, -(dxx * gy - dxy * gx) / safe, 0.0)
    ok &= (np.abs(ox) < 1.0) & (np.abs(oy) < 1.0)
    ox = np.where(ok, ox, 0.0)
    oy = np.where(ok, oy, 0.0)
    value = p[:, 1, 1] + 0.5 * (gx * ox + gy * oy)
    return ox, oy, value, ok


def _gather_patches(padded: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """(n, 3, 3) neighborhoods from a map padded with one zero border pixel."""
    off = np.arange(-1, 2)
    rows = (ys[:, None, None] + 1) + off[None, :, None]
    cols = (xs[:, None, None] + 1) + off[None, None, :]
    return padded[rows, cols]


def _nms_from_maps(maps: list[np.ndarray], pyramid: ScaleSpacePyramid) -> list[Keypoint]:
    """3x3 scale-space NMS + three-step refinement over per-layer score maps."""
    n_layers = len(pyramid.layers)
    padded: list[np.ndarray | None] = [None] * n_layers
    sigmas = [1.0 / layer.scale for layer in pyramid.layers]
    keypoints: list[Keypoint] = []

    def _padded(j: int) -> np.ndarray:
        if padded[j] is None:
            padded[j] = np.pad(maps[j], 1)
        return padded[j]

    for i, layer in enumerate(pyramid.layers):
        smap = maps[i]
        ys, xs = np.nonzero(smap)
        if ys.size == 0:
            continue
        s = smap[ys, xs]
        keep = np.ones(ys.size, bool)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                keep &= s > smap[ys + dy, xs + dx]

        h, w = smap.shape
        proj = {}
        for j in (i - 1, i + 1):
            if not (0 <= j < n_layers):
                continue
            hj, wj = maps[j].shape
            yj = np.minimum((ys * hj + (h >> 1)) // h, hj - 1)
            xj = np.minimum((xs * wj + (w >> 1)) // w, wj - 1)
            keep &= s > maps[j][yj, xj]
            proj[j] = (yj, xj)
        if not keep.any():
            continue

        ys_k, xs_k, s_k = ys[keep], xs[keep], s[keep]
        own = _gather_patches(_padded(i), ys_k, xs_k)
        ox, oy, v0, _ = _fit_quadratic_peak(own)

        neighbor_vals = {}
        for j, (yj, xj) in proj.items():
            pj = _gather_patches(_padded(j), yj[keep], xj[keep])
            _, _, vj, okj = _fit_quadratic_peak(pj)
            neighbor_vals[j] = np.where(okj, vj, pj.max(axis=(1, 2)))

        sig = np.full(ys_k.size, sigmas[i])
        if (i - 1) in neighbor_vals and (i + 1) in neighbor_vals:
            vb = neighbor_vals[i - 1]  # finer layer (smaller sigma)
            va = neighbor_vals[i + 1]  # coarser layer (larger sigma)
            denom = vb - 2.0 * v0 + va
            concave = denom < 0.0
            delta = np.where(concave, 0.5 * (vb - va) / np.where(concave, denom, -1.0), 0.0)
            delta = np.where(np.abs(delta) < 1.0, delta, 0.0)
            up = sigmas[i + 1] / sigmas[i]
            down = sigmas[i - 1] / sigmas[i]
            sig = sigmas[i] * up ** np.maximum(delta, 0.0) * down ** np.maximum(-delta, 0.0)

        scale = layer.scale
        fw, fh = pyramid.layers[0].frame.width, pyramid.layers[0].frame.height
        x0 = np.clip((xs_k + ox) / scale, 0.0, fw - 1e-6)
        y0 = np.clip((ys_k + oy) / scale, 0.0, fh - 1e-6)
        for k in range(ys_k.size):
            keypoints.append(
                Keypoint(float(x0[k]), float(y0[k]), float(sig[k]), 0.0, float(v0[k]))
            )
    return keypoints


def nms_and_refine(
    candidates: dict[tuple[str, int], list[Candidate]],
    pyramid: ScaleSpacePyramid,
) -> list[Keypoint]:
    """Keep strict 3x3 scale-space maxima and refine position and scale.

    ``candidates`` maps (kind, level) to that layer's candidate list; layers
    missing from the dict are treated as empty. Top/bottom layers compare
    against their single existing neighbor only.
    """
    maps = [np.zeros(layer.frame.data.shape, np.int32) for layer in pyramid.layers]
    for i, layer in enumerate(pyramid.layers):
        for c in candidates.get((layer.kind, layer.level), []):
            maps[i][c.y, c.x] = c.score
    return _nms_from_maps(maps, pyramid)
