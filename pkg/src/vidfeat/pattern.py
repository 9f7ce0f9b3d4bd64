"""The descriptor's sampling pattern: a versioned data asset of the repo.

60 points on 4 concentric rings around a center point, each with a box
smoothing radius. The 512 closest point pairs become the descriptor bits
(short pairs); pairs farther apart than LONG_MIN_DIST drive orientation
(long pairs). The canonical pattern ships as ``data/sampling_pattern_v1.npz``
so descriptors stay comparable across runs and machines; run
``python -m vidfeat.pattern`` to regenerate the asset from the constants
below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

PATTERN_VERSION = "v1"
RING_RADII = (0.0, 2.9, 4.9, 7.4, 10.8)
RING_COUNTS = (1, 10, 14, 15, 20)
SHORT_PAIR_COUNT = 512
LONG_MIN_DIST = 13.67

_ASSET = f"sampling_pattern_{PATTERN_VERSION}.npz"


@dataclass(frozen=True, eq=False)
class SamplingPattern:
    points: np.ndarray  # (60, 2) float64, pattern units (pixels at sigma 1)
    radii: np.ndarray  # (60,) float64 smoothing radius per point
    short_pairs: np.ndarray  # (512, 2) int32 indices, sorted by distance
    long_pairs: np.ndarray  # (L, 2) int32 indices
    version: str = PATTERN_VERSION

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def footprint(self) -> float:
        """Maximum sample offset plus its smoothing radius, in pattern units."""
        r = np.sqrt((self.points**2).sum(axis=1)) + self.radii
        return float(r.max())


def build_default_pattern() -> SamplingPattern:
    """Deterministically rebuild the canonical pattern from the constants."""
    pts = []
    radii = []
    for i, (r, n) in enumerate(zip(RING_RADII, RING_COUNTS)):
        phase = (i % 2) * math.pi / n
        for k in range(n):
            a = 2.0 * math.pi * k / n + phase
            pts.append((r * math.cos(a), r * math.sin(a)))
            radii.append(max(0.5, r * math.sin(math.pi / n)))
    points = np.array(pts, dtype=np.float64)
    rad = np.array(radii, dtype=np.float64)

    n = points.shape[0]
    ii, jj = np.triu_indices(n, k=1)
    d = np.sqrt(((points[ii] - points[jj]) ** 2).sum(axis=1))
    order = np.lexsort((jj, ii, d))
    short = order[:SHORT_PAIR_COUNT]
    if d[short].max() >= LONG_MIN_DIST:
        raise RuntimeError("short/long pair partition overlaps; adjust constants")
    long_sel = d > LONG_MIN_DIST
    long_pairs = np.stack([ii[long_sel], jj[long_sel]], axis=1).astype(np.int32)
    short_pairs = np.stack([ii[short], jj[short]], axis=1).astype(np.int32)
    return SamplingPattern(points, rad, short_pairs, long_pairs, PATTERN_VERSION)


def save_pattern(pattern: SamplingPattern, path) -> None:
    np.savez(
        path,
        points=pattern.points,
        radii=pattern.radii,
        short_pairs=pattern.short_pairs,
        long_pairs=pattern.long_pairs,
        version=np.array(pattern.version),
    )


def load_pattern(path) -> SamplingPattern:
    with np.load(path) as z:
        return SamplingPattern(
            points=z["points"],
            radii=z["radii"],
            short_pairs=z["short_pairs"],
            long_pairs=z["long_pairs"],
            version=str(z["version"]),
        )


_default: SamplingPattern | None = None


def default_pattern() -> SamplingPattern:
    """The packaged pattern asset (cached)."""
    global _default
    if _default is None:
        with resources.as_file(resources.files("vidfeat") / "data" / _ASSET) as p:
            _default = load_pattern(p)
    return _default


def _regenerate() -> Path:
    out = Path(__file__).parent / "data" / _ASSET
    out.parent.mkdir(parents=True, exist_ok=True)
    save_pattern(build_default_pattern(), out)
    return out


if __name__ == "__main__":
    print(f"wrote {_regenerate()}")
