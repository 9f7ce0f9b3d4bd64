"""Fast local-feature extraction for video: mask-gated detection over a
scale-space corner detector and 512-bit binary descriptor, a temporally
coherent block-matching baseline, matching/verification utilities, and the
benchmark harness that ties them together."""

from .descriptor import describe, estimate_orientation, hamming
from .detector import Candidate, Keypoint, ast_corner_score, detect_candidates, nms_and_refine
from .evaluation import (
    ObjectEstimate,
    ObjectModel,
    RankedList,
    average_precision,
    locate_object,
    mean_average_precision,
    sequence_ap,
    tracking_accuracy,
)
from .io import load_sequence
from .masking import (
    DetectionMask,
    Feature,
    MaskConfig,
    SubsampledMask,
    intensity_diff_mask,
    keypoint_binning_mask,
    merge_features,
    upsample_mask,
)
from .matching import Match, MatchConfig, count_mpr, radius_match, ransac_homography
from .pattern import SamplingPattern, default_pattern
from .pipeline import FrameReport, PipelineConfig, divergence_report, run_pipeline
from .pyramid import GrayFrame, ScaleSpacePyramid, build_pyramid
from .synth import SceneObject, SceneSpec, synth_sequence
from .temporal import GopConfig, baseline_step, sad_block, spiral_search

__version__ = "0.1.0"

__all__ = [
    "Candidate",
    "DetectionMask",
    "Feature",
    "FrameReport",
    "GopConfig",
    "GrayFrame",
    "Keypoint",
    "MaskConfig",
    "Match",
    "MatchConfig",
    "ObjectEstimate",
    "ObjectModel",
    "PipelineConfig",
    "RankedList",
    "SamplingPattern",
    "ScaleSpacePyramid",
    "SceneObject",
    "SceneSpec",
    "SubsampledMask",
    "ast_corner_score",
    "average_precision",
    "baseline_step",
    "build_pyramid",
    "count_mpr",
    "default_pattern",
    "describe",
    "detect_candidates",
    "divergence_report",
    "estimate_orientation",
    "hamming",
    "intensity_diff_mask",
    "keypoint_binning_mask",
    "load_sequence",
    "locate_object",
    "mean_average_precision",
    "merge_features",
    "nms_and_refine",
    "radius_match",
    "ransac_homography",
    "run_pipeline",
    "sad_block",
    "sequence_ap",
    "spiral_search",
    "synth_sequence",
    "tracking_accuracy",
    "upsample_mask",
]
