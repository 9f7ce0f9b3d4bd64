"""Rotation-compensated 512-bit binary descriptors.

Each bit compares the smoothed intensities of one short pair of pattern
points, scaled by the keypoint's sigma and rotated by its orientation.
Smoothing is a single box-filtered lookup per point (integral image, floor
division), so descriptors are integer-exact and deterministic. Keypoints
whose center lies within 3*sigma of a layer border are dropped; individual
samples falling outside the layer clamp to the border.
"""

from __future__ import annotations

import numpy as np

from . import accel
from .detector import Keypoint
from .pattern import SamplingPattern, default_pattern
from .pyramid import GrayFrame

DESCRIPTOR_BITS = 512
DESCRIPTOR_BYTES = 64


class FootprintError(ValueError):
    """Keypoint too close to the layer border for descriptor sampling."""


def integral_image(data: np.ndarray) -> np.ndarray:
    """(h+1, w+1) int64 summed-area table of a uint8 image."""
    sat = np.zeros((data.shape[0] + 1, data.shape[1] + 1), np.int64)
    np.cumsum(np.cumsum(data, axis=0, dtype=np.int64), axis=1, out=sat[1:, 1:])
    return sat


def _box_means_np(sat, xs, ys, rs, w, h):
    x0 = np.clip(xs - rs, 0, w - 1)
    x1 = np.clip(xs + rs, 0, w - 1)
    y0 = np.clip(ys - rs, 0, h - 1)
    y1 = np.clip(ys + rs, 0, h - 1)
    s = sat[y1 + 1, x1 + 1] - sat[y0, x1 + 1] - sat[y1 + 1, x0] + sat[y0, x0]
    return s // ((x1 - x0 + 1) * (y1 - y0 + 1))


def _sample_positions_np(kx, ky, sigma, theta, pts):
    c = np.cos(theta)[:, None]
    s = np.sin(theta)[:, None]
    px = pts[:, 0][None, :]
    py = pts[:, 1][None, :]
    rx = kx[:, None] + sigma[:, None] * (c * px - s * py)
    ry = ky[:, None] + sigma[:, None] * (s * px + c * py)
    return np.floor(rx + 0.5).astype(np.int64), np.floor(ry + 0.5).astype(np.int64)


def _point_values_np(sat, w, h, kx, ky, sigma, theta, pattern):
    xs, ys = _sample_positions_np(kx, ky, sigma, theta, pattern.points)
    xs = np.clip(xs, 0, w - 1)
    ys = np.clip(ys, 0, h - 1)
    rs = np.floor(pattern.radii[None, :] * sigma[:, None] + 0.5).astype(np.int64)
    return _box_means_np(sat, xs, ys, rs, w, h)


def _describe_batch_np(sat, w, h, kx, ky, sigma, theta, pattern):
    vals = _point_values_np(sat, w, h, kx, ky, sigma, theta, pattern)
    si = pattern.short_pairs[:, 0]
    sj = pattern.short_pairs[:, 1]
    return (vals[:, si] > vals[:, sj]).astype(np.uint8)


def _orientations_np(sat, w, h, kx, ky, sigma, pattern):
    vals = _point_values_np(sat, w, h, kx, ky, sigma, np.zeros_like(kx), pattern)
    li = pattern.long_pairs[:, 0]
    lj = pattern.long_pairs[:, 1]
    dp = pattern.points[li] - pattern.points[lj]
    inv_d2 = 1.0 / (dp**2).sum(axis=1)
    dv = (vals[:, li] - vals[:, lj]).astype(np.float64)
    gx = dv @ (dp[:, 0] * inv_d2)
    gy = dv @ (dp[:, 1] * inv_d2)
    theta = np.arctan2(gy, gx)
    return np.where(theta <= -np.pi, np.pi, theta)


if accel.NUMBA_AVAILABLE:
    from numba import njit

    @njit(cache=True)
    def _box_mean_jit(sat, x, y, r, w, h):  # pragma: no cover - jitted
        x0 = max(x - r, 0)
        x1 = min(x + r, w - 1)
        y0 = max(y - r, 0)
        y1 = min(y + r, h - 1)
        s = sat[y1 + 1, x1 + 1] - sat[y0, x1 + 1] - sat[y1 + 1, x0] + sat[y0, x0]
        return s // ((x1 - x0 + 1) * (y1 - y0 + 1))

    @njit(cache=True)
    def _point_values_jit(sat, w, h, kx, ky, sigma, theta, pts, radii, out):
        n, m = out.shape
        for i in range(n):
            c = np.cos(theta[i])
            s = np.sin(theta[i])
            for j in range(m):
                px = pts[j, 0]
                py = pts[j, 1]
                x = np.int64(np.floor(kx[i] + sigma[i] * (c * px - s * py) + 0.5))
                y = np.int64(np.floor(ky[i] + sigma[i] * (s * px + c * py) + 0.5))
                if x < 0:
                    x = 0
                elif x > w - 1:
                    x = w - 1
                if y < 0:
                    y = 0
                elif y > h - 1:
                    y = h - 1
                r = np.int64(np.floor(radii[j] * sigma[i] + 0.5))
                out[i, j] = _box_mean_jit(sat, x, y, r, w, h)
        return out

    @njit(cache=True)
    def _describe_batch_jit(sat, w, h, kx, ky, sigma, theta, pts, radii, si, sj):
        n = kx.shape[0]
        vals = np.empty((n, pts.shape[0]), np.int64)
        _point_values_jit(sat, w, h, kx, ky, sigma, theta, pts, radii, vals)
        bits = np.empty((n, si.shape[0]), np.uint8)
        for i in range(n):
            for b in range(si.shape[0]):
                bits[i, b] = 1 if vals[i, si[b]] > vals[i, sj[b]] else 0
        return bits

    @njit(cache=True)
    def _orientations_jit(sat, w, h, kx, ky, sigma, pts, radii, li, lj, wx, wy):
        n = kx.shape[0]
        vals = np.empty((n, pts.shape[0]), np.int64)
        zeros = np.zeros(n, np.float64)
        _point_values_jit(sat, w, h, kx, ky, sigma, zeros, pts, radii, vals)
        thetas = np.empty(n, np.float64)
        for i in range(n):
            gx = 0.0
            gy = 0.0
            for p in range(li.shape[0]):
                dv = np.float64(vals[i, li[p]] - vals[i, lj[p]])
                gx += dv * wx[p]
                gy += dv * wy[p]
            t = np.arctan2(gy, gx)
            thetas[i] = np.pi if t <= -np.pi else t
        return thetas

    @accel.register_warmup
    def _warm_descriptor():
        sat = integral_image(np.zeros((16, 16), np.uint8))
        one = np.zeros(1, np.float64) + 8.0
        pts = np.zeros((2, 2), np.float64)
        radii = np.ones(2, np.float64)
        i0 = np.zeros(1, np.int32)
        i1 = np.ones(1, np.int32)
        _describe_batch_jit(sat, 16, 16, one, one, np.ones(1), np.zeros(1), pts, radii,
                            i0, i1)
        _orientations_jit(sat, 16, 16, one, one, np.ones(1), pts, radii,
                          i0, i1, np.ones(1), np.ones(1))


_pair_cache: dict[int, tuple] = {}


def _pair_arrays(pattern: SamplingPattern):
    """Contiguous pair-index and orientation-weight arrays (cached)."""
    key = id(pattern)
    hit = _pair_cache.get(key)
    if hit is not None and hit[0] is pattern:
        return hit[1]
    dp = pattern.points[pattern.long_pairs[:, 0]] - pattern.points[pattern.long_pairs[:, 1]]
    inv_d2 = 1.0 / (dp**2).sum(axis=1)
    arrays = (
        np.ascontiguousarray(pattern.short_pairs[:, 0]),
        np.ascontiguousarray(pattern.short_pairs[:, 1]),
        np.ascontiguousarray(pattern.long_pairs[:, 0]),
        np.ascontiguousarray(pattern.long_pairs[:, 1]),
        np.ascontiguousarray(dp[:, 0] * inv_d2),
        np.ascontiguousarray(dp[:, 1] * inv_d2),
    )
    _pair_cache[key] = (pattern, arrays)
    return arrays


def border_ok(layer: GrayFrame, kp: Keypoint) -> bool:
    """True when the keypoint center is at least 3*sigma from every border."""
    m = 3.0 * kp.sigma
    return (
        kp.x >= m
        and kp.y >= m
        and kp.x <= layer.width - 1 - m
        and kp.y <= layer.height - 1 - m
    )


def orientations_batch(
    layer: GrayFrame, kps: list[Keypoint], pattern: SamplingPattern, sat=None
) -> np.ndarray:
    """Orientation per keypoint from the average long-pair gradient."""
    if sat is None:
        sat = integral_image(layer.data)
    kx = np.array([k.x for k in kps])
    ky = np.array([k.y for k in kps])
    sg = np.array([k.sigma for k in kps])
    if accel.USE_NUMBA:
        _, _, li, lj, wx, wy = _pair_arrays(pattern)
        return _orientations_jit(
            sat, layer.width, layer.height, kx, ky, sg,
            pattern.points, pattern.radii, li, lj, wx, wy,
        )
    return _orientations_np(sat, layer.width, layer.height, kx, ky, sg, pattern)


def describe_batch(
    layer: GrayFrame,
    kps: list[Keypoint],
    thetas: np.ndarray,
    pattern: SamplingPattern,
    sat=None,
) -> np.ndarray:
    """(n, 512) uint8 bit matrix; bit j = smoothed(pair_j[0]) > smoothed(pair_j[1])."""
    if sat is None:
        sat = integral_image(layer.data)
    kx = np.array([k.x for k in kps])
    ky = np.array([k.y for k in kps])
    sg = np.array([k.sigma for k in kps])
    th = np.ascontiguousarray(thetas, np.float64)
    if accel.USE_NUMBA:
        si, sj, _, _, _, _ = _pair_arrays(pattern)
        return _describe_batch_jit(
            sat, layer.width, layer.height, kx, ky, sg, th,
            pattern.points, pattern.radii, si, sj,
        )
    return _describe_batch_np(sat, layer.width, layer.height, kx, ky, sg, th, pattern)


def estimate_orientation(
    layer: GrayFrame, kp: Keypoint, pattern: SamplingPattern | None = None
) -> float:
    """Keypoint orientation in (-pi, pi]; 0 for a zero gradient vector."""
    pattern = pattern or default_pattern()
    if not border_ok(layer, kp):
        raise FootprintError(
            f"keypoint ({kp.x:.1f}, {kp.y:.1f}, sigma={kp.sigma:.2f}) too close to border"
        )
    return float(orientations_batch(layer, [kp], pattern)[0])


def describe(
    layer: GrayFrame,
    kp: Keypoint,
    theta: float,
    pattern: SamplingPattern | None = None,
) -> np.ndarray:
    """512-element 0/1 uint8 descriptor for one keypoint."""
    pattern = pattern or default_pattern()
    if not border_ok(layer, kp):
        raise FootprintError(
            f"keypoint ({kp.x:.1f}, {kp.y:.1f}, sigma={kp.sigma:.2f}) too close to border"
        )
    return describe_batch(layer, [kp], np.array([theta]), pattern)[0]


def hamming(a: np.ndarray, b: np.ndarray) -> int:
    """Number of differing bit positions between two equal-length bit vectors."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"descriptor length mismatch: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def pack_descriptor(bits: np.ndarray) -> bytes:
    """64 bytes, MSB-first within each byte; bit 0 is the first byte's MSB."""
    if bits.shape != (DESCRIPTOR_BITS,):
        raise ValueError("descriptor must have exactly 512 bits")
    return np.packbits(bits.astype(np.uint8)).tobytes()


def unpack_descriptor(raw: bytes) -> np.ndarray:
    if len(raw) != DESCRIPTOR_BYTES:
        raise ValueError("packed descriptor must be exactly 64 bytes")
    return np.unpackbits(np.frombuffer(raw, np.uint8))


def descriptor_hex(bits: np.ndarray) -> str:
    return pack_descriptor(bits).hex()
