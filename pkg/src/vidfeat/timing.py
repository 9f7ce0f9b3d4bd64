"""Stage-timing clock selection.

Per-stage times should come from the process-CPU clock, but some sandboxed
kernels quantize CLOCK_PROCESS_CPUTIME_ID to 10 ms, which is useless for
millisecond-scale stages. A one-time probe measures the real granularity;
when it is coarser than 1 ms the monotonic wall clock takes over for stage
timing (the pipeline is single-threaded, so the two agree up to scheduler
noise). The per-frame wall time is always recorded alongside.
"""

from __future__ import annotations

import time

_PROBE_BUDGET_NS = 20_000_000  # stop probing after 20 ms of wall time
_FINE_TICK_NS = 1_000_000  # CPU clock must beat 1 ms to be trusted

_stage_clock_ns = None
_stage_clock_is_cpu = None


def _probe_cpu_tick_ns() -> int:
    """Smallest observed increment of process_time_ns within the budget."""
    start_wall = time.perf_counter_ns()
    last = time.process_time_ns()
    best = None
    while time.perf_counter_ns() - start_wall < _PROBE_BUDGET_NS:
        now = time.process_time_ns()
        if now != last:
            delta = now - last
            if best is None or delta < best:
                best = delta
            if best < _FINE_TICK_NS:
                break
            last = now
    return best if best is not None else _PROBE_BUDGET_NS


def _init() -> None:
    global _stage_clock_ns, _stage_clock_is_cpu
    if _stage_clock_ns is not None:
        return
    if _probe_cpu_tick_ns() < _FINE_TICK_NS:
        _stage_clock_ns = time.process_time_ns
        _stage_clock_is_cpu = True
    else:
        _stage_clock_ns = time.perf_counter_ns
        _stage_clock_is_cpu = False


def stage_clock_ms() -> float:
    """Current stage-clock reading in milliseconds."""
    if _stage_clock_ns is None:
        _init()
    return _stage_clock_ns() / 1e6


def stage_clock_is_cpu() -> bool:
    if _stage_clock_ns is None:
        _init()
    return bool(_stage_clock_is_cpu)
