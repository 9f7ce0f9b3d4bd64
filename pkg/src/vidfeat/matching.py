"""Descriptor radius matching, RANSAC homography, and the MPR measure.

Radius matching keeps every descriptor pair within Hamming distance t_m
(default 102), so one query feature may match several references. Geometric
verification fits a homography from seeded 4-point minimal samples via
normalized DLT, refits on the best consensus set, and reports the matches
that reproject within tolerance under the returned model. MPR is the size
of that inlier set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import accel
from .masking import Feature

DEFAULT_MATCH_RADIUS = 102  # Hamming threshold on 512-bit descriptors

_POPCOUNT = np.array([i.bit_count() for i in range(256)], np.uint8)


@dataclass(frozen=True, slots=True)
class Match:
    query_idx: int
    ref_idx: int
    distance: int


@dataclass(frozen=True)
class MatchConfig:
    t_m: int = DEFAULT_MATCH_RADIUS
    iters: int = 1000
    reproj_tol: float = 3.0
    seed: int = 0


def _pack_descriptors(features: list[Feature]) -> np.ndarray:
    bits = np.stack([f.desc for f in features])
    if bits.shape[1] % 8 != 0:
        raise ValueError("descriptor length must be a multiple of 8")
    return np.packbits(bits, axis=1)


def _hamming_matrix_np(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    out = np.empty((q.shape[0], r.shape[0]), np.int32)
    for i in range(q.shape[0]):
        out[i] = _POPCOUNT[np.bitwise_xor(q[i], r)].sum(axis=1, dtype=np.int32)
    return out


if accel.NUMBA_AVAILABLE:
    from numba import njit

    @njit(cache=True)
    def _hamming_matrix_jit(q, r, lut):  # pragma: no cover - jitted
        nq, nb = q.shape
        nr = r.shape[0]
        out = np.empty((nq, nr), np.int32)
        for i in range(nq):
            for j in range(nr):
                acc = np.int32(0)
                for b in range(nb):
                    acc += lut[q[i, b] ^ r[j, b]]
                out[i, j] = acc
        return out

    @accel.register_warmup
    def _warm_hamming():
        z = np.zeros((1, 64), np.uint8)
        _hamming_matrix_jit(z, z, _POPCOUNT)


def hamming_matrix(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Pairwise Hamming distances between packed descriptor rows."""
    if accel.USE_NUMBA:
        return _hamming_matrix_jit(q, r, _POPCOUNT)
    return _hamming_matrix_np(q, r)


def radius_match(
    query: list[Feature], reference: list[Feature], t_m: int = DEFAULT_MATCH_RADIUS
) -> list[Match]:
    """Every (query, reference) pair with Hamming distance <= t_m."""
    if not query or not reference:
        return []
    lengths = {f.desc.shape[0] for f in query} | {f.desc.shape[0] for f in reference}
    if len(lengths) != 1:
        raise ValueError(f"descriptors have mixed lengths: {sorted(lengths)}")
    d = hamming_matrix(_pack_descriptors(query), _pack_descriptors(reference))
    qi, ri = np.nonzero(d <= t_m)
    return [Match(int(q), int(r), int(d[q, r])) for q, r in zip(qi, ri)]


def _normalize_points(pts: np.ndarray):
    centroid = pts.mean(axis=0)
    dist = np.sqrt(((pts - centroid) ** 2).sum(axis=1)).mean()
    if dist < 1e-12:
        return None
    s = np.sqrt(2.0) / dist
    t = np.array(
        [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
    )
    return t


def _dlt(src: np.ndarray, dst: np.ndarray) -> np.ndarray | None:
    """Direct linear transform with coordinate pre-conditioning."""
    ts = _normalize_points(src)
    td = _normalize_points(dst)
    if ts is None or td is None:
        return None
    sh = np.column_stack([src, np.ones(len(src))]) @ ts.T
    dh = np.column_stack([dst, np.ones(len(dst))]) @ td.T
    a = np.zeros((2 * len(src), 9))
    a[0::2, 0:3] = -sh
    a[0::2, 6:9] = sh * dh[:, [0]]
    a[1::2, 3:6] = -sh
    a[1::2, 6:9] = sh * dh[:, [1]]
    try:
        _, _, vt = np.linalg.svd(a)
    except np.linalg.LinAlgError:
        return None
    h = vt[-1].reshape(3, 3)
    h = np.linalg.inv(td) @ h @ ts
    if not np.all(np.isfinite(h)):
        return None
    if abs(h[2, 2]) > 1e-12:
        h = h / h[2, 2]
    return h


def _usable(h: np.ndarray | None) -> bool:
    if h is None or not np.all(np.isfinite(h)):
        return False
    det = np.linalg.det(h)
    if abs(det) < 1e-12:
        return False
    return np.linalg.cond(h) < 1e12


def project_points(h: np.ndarray, pts: np.ndarray) -> np.ndarray:
    ph = np.column_stack([pts, np.ones(len(pts))]) @ h.T
    z = ph[:, 2]
    z = np.where(np.abs(z) < 1e-12, 1e-12, z)
    return ph[:, :2] / z[:, None]


def ransac_homography(
    matches: list[Match],
    query_kps,
    ref_kps,
    iters: int = 1000,
    reproj_tol: float = 3.0,
    seed: int = 0,
):
    """Best-consensus homography mapping query points onto reference points.

    Returns (H, inlier_indices) where the indices select matches whose
    reprojection error under the returned H is below reproj_tol; the model is
    refit on the best consensus set before inliers are recomputed. Fewer than
    4 matches or universally degenerate samples give (None, []).
    """
    if len(matches) < 4:
        return None, []
    src = np.array([[query_kps[m.query_idx].x, query_kps[m.query_idx].y] for m in matches])
    dst = np.array([[ref_kps[m.ref_idx].x, ref_kps[m.ref_idx].y] for m in matches])
    rng = np.random.default_rng(seed)
    n = len(matches)
    best_inliers: np.ndarray | None = None
    best_count = 0
    for _ in range(iters):
        idx = rng.choice(n, 4, replace=False)
        h = _dlt(src[idx], dst[idx])
        if not _usable(h):
            continue
        err = np.sqrt(((project_points(h, src) - dst) ** 2).sum(axis=1))
        inliers = err < reproj_tol
        count = int(inliers.sum())
        if count > best_count:
            best_count = count
            best_inliers = inliers
    if best_inliers is None or best_count < 4:
        return None, []
    h = _dlt(src[best_inliers], dst[best_inliers])
    if not _usable(h):
        return None, []
    err = np.sqrt(((project_points(h, src) - dst) ** 2).sum(axis=1))
    final = np.nonzero(err < reproj_tol)[0]
    return h, [int(i) for i in final]


def match_and_verify(query: list[Feature], reference: list[Feature], cfg: MatchConfig):
    """radius match + RANSAC; returns (H, inlier match list)."""
    matches = radius_match(query, reference, cfg.t_m)
    h, inl = ransac_homography(
        matches,
        [f.kp for f in query],
        [f.kp for f in reference],
        iters=cfg.iters,
        reproj_tol=cfg.reproj_tol,
        seed=cfg.seed,
    )
    return h, [matches[i] for i in inl]


def count_mpr(
    query: list[Feature], reference: list[Feature], t_m: int, ransac_cfg: MatchConfig
) -> int:
    """Matches-post-RANSAC: inlier count of the verified radius match."""
    cfg = MatchConfig(
        t_m=t_m,
        iters=ransac_cfg.iters,
        reproj_tol=ransac_cfg.reproj_tol,
        seed=ransac_cfg.seed,
    )
    _, inliers = match_and_verify(query, reference, cfg)
    return len(inliers)
