"""Frame sequence loading and image writing.

A sequence is a directory of PGM/PNG files ordered by the numeric part of
their (zero-padded) filenames. Color inputs convert to 8-bit grayscale by
luma weighting.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image

from .pyramid import GrayFrame

_EXTENSIONS = {".pgm", ".png"}
_DIGITS = re.compile(r"(\d+)")


def _numeric_key(path: Path):
    m = _DIGITS.search(path.stem)
    return (int(m.group(1)) if m else float("inf"), path.name)


def load_sequence(path) -> list[GrayFrame]:
    """Load all PGM/PNG frames under a directory, in filename-number order."""
    root = Path(path)
    if not root.is_dir():
        raise ValueError(f"not a sequence directory: {root}")
    files = sorted(
        (p for p in root.iterdir() if p.suffix.lower() in _EXTENSIONS),
        key=_numeric_key,
    )
    if not files:
        raise ValueError(f"no PGM/PNG frames in {root}")
    frames: list[GrayFrame] = []
    dims = None
    for i, f in enumerate(files):
        try:
            with Image.open(f) as img:
                if img.mode != "L":
                    img = img.convert("L")
                data = np.asarray(img, np.uint8)
        except Exception as e:
            raise ValueError(f"unreadable frame file {f.name}: {e}") from e
        if dims is None:
            dims = data.shape
        elif data.shape != dims:
            raise ValueError(
                f"inconsistent dimensions in {f.name}: "
                f"{data.shape[1]}x{data.shape[0]} vs {dims[1]}x{dims[0]}"
            )
        frames.append(GrayFrame(np.ascontiguousarray(data), index=i))
    return frames


def write_frame(path, data: np.ndarray) -> None:
    """Write a 2-D uint8 array as PGM or PNG depending on the extension."""
    Image.fromarray(data, mode="L").save(path)
