"""Scale-space pyramid of octaves and intra-octaves.

Octave o halves octave o-1 with a 2x2 box average; intra-octave 0 resamples
the original by 2/3 with a 3x3 area-weighted average, deeper intra-octaves
halve again. All downsampled dimensions round by floor and all layer bytes
are a pure function of the input bytes, so identical frames always produce
identical pyramids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OCTAVE = "octave"
INTRA = "intra"


@dataclass(frozen=True, eq=False)
class GrayFrame:
    """A single 8-bit grayscale frame (row-major) plus its frame number."""

    data: np.ndarray
    index: int = 0

    def __post_init__(self):
        if not isinstance(self.data, np.ndarray) or self.data.ndim != 2:
            raise ValueError("frame data must be a 2-D array")
        if self.data.dtype != np.uint8:
            raise ValueError("frame data must be uint8")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError("frame dimensions must be positive")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class PyramidLayer:
    frame: GrayFrame
    scale: float  # ratio of this layer's sampling grid to the original frame
    kind: str  # OCTAVE or INTRA
    level: int


@dataclass(eq=False)
class ScaleSpacePyramid:
    """Layers ordered by strictly decreasing scale: o0, i0, o1, i1, ..."""

    layers: list[PyramidLayer]
    n_octaves: int

    def layer_at(self, kind: str, level: int) -> GrayFrame:
        """Return (a read-only view of) the stored layer, or raise KeyError."""
        for layer in self.layers:
            if layer.kind == kind and layer.level == level:
                return layer.frame
        raise KeyError(f"no {kind} layer at level {level}")


def _halve(a: np.ndarray) -> np.ndarray:
    """2x2 box average + decimation; odd trailing rows/columns are dropped."""
    h2, w2 = a.shape[0] // 2, a.shape[1] // 2
    if h2 < 1 or w2 < 1:
        raise ValueError("dimension underflow while halving")
    s = a[: 2 * h2, : 2 * w2].reshape(h2, 2, w2, 2).sum(axis=(1, 3), dtype=np.uint16)
    return ((s + 2) >> 2).astype(np.uint8)


def _reduce_two_thirds_axis(a: np.ndarray, axis: int) -> np.ndarray:
    """Weighted pair sums for a 2/3 resample along one axis (values are 3x)."""
    a = np.moveaxis(a, axis, 0)
    n = a.shape[0]
    m = (2 * n) // 3
    if m < 1:
        raise ValueError("dimension underflow in 2/3 resample")
    out = np.empty((m,) + a.shape[1:], dtype=np.uint32)
    even = 3 * np.arange((m + 1) // 2)
    odd = 3 * np.arange(m // 2) + 1
    out[0::2] = 2 * a[even].astype(np.uint32) + a[even + 1].astype(np.uint32)
    out[1::2] = a[odd].astype(np.uint32) + 2 * a[odd + 1].astype(np.uint32)
    return np.moveaxis(out, 0, axis)


def _two_thirds(a: np.ndarray) -> np.ndarray:
    """Area-weighted 2/3 resample: output pixel i covers input [1.5i, 1.5i+1.5)."""
    v = _reduce_two_thirds_axis(_reduce_two_thirds_axis(a, 0), 1)
    return ((v + 4) // 9).astype(np.uint8)


def build_pyramid(frame: GrayFrame, n_octaves: int = 4) -> ScaleSpacePyramid:
    """Build n_octaves octave layers and n_octaves intra-octave layers.

    Raises ValueError if n_octaves < 1, if the frame is smaller than
    2**(n_octaves-1) in either axis, or if any layer would lose a dimension.
    """
    if n_octaves < 1:
        raise ValueError("n_octaves must be >= 1")
    need = 1 << (n_octaves - 1)
    if frame.width < need or frame.height < need:
        raise ValueError(
            f"frame {frame.width}x{frame.height} too small for {n_octaves} octaves"
        )

    octaves = [frame.data]
    for _ in range(1, n_octaves):
        octaves.append(_halve(octaves[-1]))
    intras = [_two_thirds(frame.data)]
    for _ in range(1, n_octaves):
        intras.append(_halve(intras[-1]))

    layers = []
    for o in range(n_octaves):
        oframe = frame if o == 0 else GrayFrame(octaves[o], frame.index)
        layers.append(PyramidLayer(oframe, 2.0 ** (-o), OCTAVE, o))
        layers.append(
            PyramidLayer(GrayFrame(intras[o], frame.index), 2.0 ** (-o) / 1.5, INTRA, o)
        )
    return ScaleSpacePyramid(layers, n_octaves)
