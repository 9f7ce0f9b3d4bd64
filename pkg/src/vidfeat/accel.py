"""Dispatch between numba-jitted kernels and their pure-numpy twins.

Every hot inner loop in this package exists twice: a ``@njit`` function and
a vectorized numpy implementation that computes identical results. Which one
the public entry points use is decided once, at import time:

* ``VIDFEAT_NUMBA=0`` (also ``false`` / ``off`` / ``no``) forces the numpy
  paths;
* otherwise numba is used whenever it is importable.

``benchmarks/bench_kernels.py`` times the two sides against each other and
checks that they agree.
"""

from __future__ import annotations

import os

_FALSEY = {"0", "false", "off", "no"}


def _flag_enabled() -> bool:
    return os.environ.get("VIDFEAT_NUMBA", "1").strip().lower() not in _FALSEY


try:
    import numba  # noqa: F401

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and _flag_enabled()

_warmups: list = []
_warmed = False


def register_warmup(fn):
    """Register a zero-argument callable that exercises a jitted kernel."""
    _warmups.append(fn)
    return fn


def warmup() -> None:
    """Compile every registered kernel on tiny inputs (idempotent).

    The pipeline calls this before any timed section so that jit compilation
    never pollutes per-frame CPU measurements. The flag flips before the
    warmups run so that warmups may themselves call warmed-up entry points.
    """
    global _warmed
    if _warmed:
        return
    _warmed = True
    for fn in _warmups:
        fn()
