"""Per-frame orchestration with per-stage CPU timing.

The first frame of a sequence always runs full detection; after that the
configured mode decides: ``none`` re-detects everywhere each frame,
``intensity``/``binning`` gate detection by a mask and propagate features
from covered-out regions, ``temporal`` runs the block-matching baseline.
Stage times come from the process-CPU clock where the platform provides a
fine-grained one (see timing.py for the fallback); per-frame wall time is
recorded alongside. Jitted kernels are warmed up before the first frame so
compilation never lands in a report.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import accel
from .descriptor import describe_batch, integral_image, orientations_batch
from .detector import (
    DEFAULT_THRESHOLD,
    Keypoint,
    _nms_from_maps,
    _project_mask,
    _score_map,
)
from .masking import (
    DETECTED,
    DetectionMask,
    Feature,
    MaskConfig,
    intensity_diff_mask,
    keypoint_binning_mask,
    merge_features,
    upsample_mask,
)
from .matching import MatchConfig
from .pattern import default_pattern
from .pyramid import OCTAVE, GrayFrame, ScaleSpacePyramid, build_pyramid
from .temporal import GopConfig, baseline_step
from .timing import stage_clock_ms


@dataclass(frozen=True)
class PipelineConfig:
    threshold: int = DEFAULT_THRESHOLD
    n_octaves: int = 4
    mask: MaskConfig = field(default_factory=MaskConfig)
    gop: GopConfig = field(default_factory=GopConfig)
    match: MatchConfig = field(default_factory=MatchConfig)
    seed: int = 0
    parallel: bool = False  # within-frame stages only; frames stay sequential


@dataclass
class FrameReport:
    frame: int
    n_detected: int
    n_propagated: int
    n_total: int
    coverage: float
    t_pyramid_ms: float
    t_mask_ms: float
    t_detect_ms: float
    t_describe_ms: float
    t_total_ms: float
    t_wall_ms: float = 0.0
    n_dropped: int = 0
    accuracy: float | None = None


@dataclass(frozen=True, eq=False)
class DivergenceStat:
    frame: int
    only_masked: int
    only_full: int
    common: int

    @property
    def preserved(self) -> float:
        """Fraction of full-detection keypoints present in the masked run."""
        denom = self.common + self.only_full
        return 1.0 if denom == 0 else self.common / denom


_cpu_ms = stage_clock_ms


def _detect_keypoints(
    pyramid: ScaleSpacePyramid,
    threshold: int,
    mask: DetectionMask | None = None,
    masks_by_level: dict[int, DetectionMask] | None = None,
    parallel: bool = False,
) -> list[Keypoint]:
    """Score maps per layer (optionally gated) followed by scale-space NMS.

    With parallel=True the independent per-layer scans run on a thread pool
    (the jitted kernel releases the GIL); NMS joins them afterwards either
    way, so the output is identical.
    """
    if mask is not None and masks_by_level is None and not mask.bits.any():
        return []
    jobs = []
    for layer in pyramid.layers:
        gate = masks_by_level.get(layer.level) if masks_by_level else mask
        layer_mask = None
        if gate is not None:
            layer_mask = _project_mask(gate.bits, layer.frame.data.shape)
            if not layer_mask.any():
                jobs.append(None)
                continue
        jobs.append((layer.frame.data, layer_mask))
    if all(j is None for j in jobs):
        return []
    if parallel:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=4) as pool:
            futures = [
                None if j is None else pool.submit(_score_map, j[0], threshold, j[1])
                for j in jobs
            ]
            maps = [
                np.zeros(pyramid.layers[i].frame.data.shape, np.int32)
                if f is None
                else f.result()
                for i, f in enumerate(futures)
            ]
    else:
        maps = [
            np.zeros(pyramid.layers[i].frame.data.shape, np.int32)
            if j is None
            else _score_map(j[0], threshold, j[1])
            for i, j in enumerate(jobs)
        ]
    return _nms_from_maps(maps, pyramid)


def _describe_keypoints(frame: GrayFrame, kps: list[Keypoint], pattern):
    """Orient and describe keypoints on the full-resolution frame.

    Returns (features, n_dropped); keypoints whose footprint center is within
    3*sigma of the border are dropped, not silently clamped.
    """
    if kps:
        xs = np.array([k.x for k in kps])
        ys = np.array([k.y for k in kps])
        margin = 3.0 * np.array([k.sigma for k in kps])
        ok = (
            (xs >= margin)
            & (ys >= margin)
            & (xs <= frame.width - 1 - margin)
            & (ys <= frame.height - 1 - margin)
        )
        kept = [k for k, good in zip(kps, ok) if good]
    else:
        kept = []
    dropped = len(kps) - len(kept)
    if not kept:
        return [], dropped
    sat = integral_image(frame.data)
    thetas = orientations_batch(frame, kept, pattern, sat=sat)
    bits = describe_batch(frame, kept, thetas, pattern, sat=sat)
    feats = [
        Feature(replace(k, theta=float(thetas[i])), bits[i], DETECTED, 0)
        for i, k in enumerate(kept)
    ]
    return feats, dropped


def _build_mask(
    cfg: PipelineConfig,
    frame: GrayFrame,
    pyramid: ScaleSpacePyramid,
    prev_pyramid: ScaleSpacePyramid,
    prev_features: list[Feature],
):
    """Returns (merge_mask, masks_by_level or None)."""
    dims = (frame.width, frame.height)
    mc = cfg.mask
    if mc.mode == "binning":
        sub = keypoint_binning_mask(prev_features, dims, mc.grid, mc.t_h)
        return upsample_mask(sub, dims), None
    top = cfg.n_octaves - 1 if mc.octave_for_mask is None else mc.octave_for_mask
    if mc.per_layer:
        masks = {}
        for level in range(cfg.n_octaves):
            sub = intensity_diff_mask(
                prev_pyramid.layer_at(OCTAVE, level),
                pyramid.layer_at(OCTAVE, level),
                mc.t_i,
            )
            masks[level] = upsample_mask(sub, dims)
        union = DetectionMask(
            np.bitwise_or.reduce([m.bits for m in masks.values()])
        )
        return union, masks
    sub = intensity_diff_mask(
        prev_pyramid.layer_at(OCTAVE, top), pyramid.layer_at(OCTAVE, top), mc.t_i
    )
    return upsample_mask(sub, dims), None


def run_pipeline(
    frames: list[GrayFrame], cfg: PipelineConfig
) -> tuple[list[list[Feature]], list[FrameReport]]:
    """Extract features from every frame under the configured mode."""
    if not frames:
        raise ValueError("empty frame sequence")
    accel.warmup()
    pattern = default_pattern()
    if cfg.mask.mode == "temporal":
        return _run_temporal(frames, cfg, pattern)

    all_features: list[list[Feature]] = []
    reports: list[FrameReport] = []
    prev_pyramid = None
    prev_features: list[Feature] = []
    for n, frame in enumerate(frames):
        wall0 = time.perf_counter_ns()
        cpu0 = _cpu_ms()

        t0 = _cpu_ms()
        pyramid = build_pyramid(frame, cfg.n_octaves)
        t_pyramid = _cpu_ms() - t0

        mask = None
        masks_by_level = None
        t_mask = 0.0
        coverage = 1.0
        if cfg.mask.mode != "none" and n > 0:
            t0 = _cpu_ms()
            mask, masks_by_level = _build_mask(
                cfg, frame, pyramid, prev_pyramid, prev_features
            )
            coverage = mask.coverage
            t_mask = _cpu_ms() - t0

        t0 = _cpu_ms()
        kps = _detect_keypoints(
            pyramid, cfg.threshold, mask, masks_by_level, parallel=cfg.parallel
        )
        t_detect = _cpu_ms() - t0

        t0 = _cpu_ms()
        detected, n_dropped = _describe_keypoints(frame, kps, pattern)
        t_describe = _cpu_ms() - t0

        if mask is None:
            features = detected
        else:
            features = merge_features(detected, prev_features, mask)

        t_total = _cpu_ms() - cpu0
        n_det = sum(1 for f in features if f.origin == DETECTED)
        reports.append(
            FrameReport(
                frame=n,
                n_detected=n_det,
                n_propagated=len(features) - n_det,
                n_total=len(features),
                coverage=coverage,
                t_pyramid_ms=t_pyramid,
                t_mask_ms=t_mask,
                t_detect_ms=t_detect,
                t_describe_ms=t_describe,
                t_total_ms=t_total,
                t_wall_ms=(time.perf_counter_ns() - wall0) / 1e6,
                n_dropped=n_dropped,
            )
        )
        all_features.append(features)
        prev_pyramid = pyramid
        prev_features = features
    return all_features, reports


def _run_temporal(frames, cfg: PipelineConfig, pattern):
    all_features: list[list[Feature]] = []
    reports: list[FrameReport] = []
    prev_frame = None
    prev_features: list[Feature] = []
    times = {"pyramid": 0.0, "detect": 0.0, "describe": 0.0}

    def detector(frame: GrayFrame) -> list[Keypoint]:
        t0 = _cpu_ms()
        pyramid = build_pyramid(frame, cfg.n_octaves)
        times["pyramid"] = _cpu_ms() - t0
        t0 = _cpu_ms()
        kps = _detect_keypoints(pyramid, cfg.threshold, parallel=cfg.parallel)
        times["detect"] = _cpu_ms() - t0
        return kps

    def descriptor(frame: GrayFrame, kps: list[Keypoint]) -> list[Feature]:
        t0 = _cpu_ms()
        feats, dropped = _describe_keypoints(frame, kps, pattern)
        times["describe"] = _cpu_ms() - t0
        times["dropped"] = dropped
        return feats

    for n, frame in enumerate(frames):
        wall0 = time.perf_counter_ns()
        cpu0 = _cpu_ms()
        times.update(pyramid=0.0, detect=0.0, describe=0.0, dropped=0)
        on_gop = n % cfg.gop.delta == 0 or prev_frame is None

        t0 = _cpu_ms()
        features = baseline_step(
            prev_features, prev_frame, frame, n, cfg.gop, detector, descriptor
        )
        t_step = _cpu_ms() - t0

        if on_gop:
            t_pyramid = times["pyramid"]
            t_detect = times["detect"]
            t_describe = times["describe"]
        else:
            t_pyramid = 0.0
            t_detect = t_step  # block matching replaces detection off-GOP
            t_describe = 0.0
        t_total = _cpu_ms() - cpu0
        n_det = sum(1 for f in features if f.origin == DETECTED)
        reports.append(
            FrameReport(
                frame=n,
                n_detected=n_det,
                n_propagated=len(features) - n_det,
                n_total=len(features),
                coverage=1.0 if on_gop else 0.0,
                t_pyramid_ms=t_pyramid,
                t_mask_ms=0.0,
                t_detect_ms=t_detect,
                t_describe_ms=t_describe,
                t_total_ms=t_total,
                t_wall_ms=(time.perf_counter_ns() - wall0) / 1e6,
                n_dropped=int(times.get("dropped", 0)),
            )
        )
        all_features.append(features)
        prev_frame = frame
        prev_features = features
    return all_features, reports


def _match_keypoint_sets(
    masked: list[Feature],
    full: list[Feature],
    pos_tol: float = 1.0,
    scale_ratio_tol: float = 1.2,
):
    """Greedy nearest-position pairing within tolerances; returns counts."""
    if not masked or not full:
        return 0, len(masked), len(full)
    cells: dict[tuple[int, int], list[int]] = {}
    for j, f in enumerate(full):
        cells.setdefault((int(f.kp.x), int(f.kp.y)), []).append(j)
    used = np.zeros(len(full), bool)
    common = 0
    reach = int(np.ceil(pos_tol))
    for f in masked:
        cx, cy = int(f.kp.x), int(f.kp.y)
        best_j = -1
        best_d = pos_tol
        for gy in range(cy - reach, cy + reach + 1):
            for gx in range(cx - reach, cx + reach + 1):
                for j in cells.get((gx, gy), ()):
                    if used[j]:
                        continue
                    g = full[j].kp
                    d = float(np.hypot(g.x - f.kp.x, g.y - f.kp.y))
                    ratio = max(g.sigma, f.kp.sigma) / min(g.sigma, f.kp.sigma)
                    if d <= best_d and ratio <= scale_ratio_tol:
                        best_d = d
                        best_j = j
        if best_j >= 0:
            used[best_j] = True
            common += 1
    return common, len(masked) - common, len(full) - common


def divergence_report(frames: list[GrayFrame], cfg: PipelineConfig) -> list[DivergenceStat]:
    """Run the masked and full pipelines side by side and diff their outputs.

    Keypoints pair up within 1 px position tolerance and 1.2x scale ratio.
    """
    full_cfg = replace(cfg, mask=replace(cfg.mask, mode="none"))
    masked_feats, _ = run_pipeline(frames, cfg)
    full_feats, _ = run_pipeline(frames, full_cfg)
    stats = []
    for n in range(len(frames)):
        common, only_masked, only_full = _match_keypoint_sets(
            masked_feats[n], full_feats[n]
        )
        stats.append(DivergenceStat(n, only_masked, only_full, common))
    return stats
