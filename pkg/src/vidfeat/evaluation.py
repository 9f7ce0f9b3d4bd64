"""Accuracy protocols: average precision, retrieval MAP, and multi-object
detection + tracking precision.

AP over one ranked list, averaged over the frames of a query and then over
queries for MAP. Object location picks the database entry with the most
matches-post-RANSAC and projects its corners through the fitted homography;
a frame counts as correctly tracked when the object id matches the ground
truth and the projected centroid lies within tolerance (10 px default,
boundary inclusive).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .masking import Feature
from .matching import MatchConfig, match_and_verify, project_points

TRACKING_TOLERANCE_PX = 10.0


@dataclass(frozen=True, eq=False)
class RankedList:
    entries: list  # database ids, best rank first (length Z)
    relevance: np.ndarray  # 0/1 per entry
    total_relevant: int  # R for this query frame; may exceed retrieved hits


@dataclass(frozen=True, eq=False)
class ObjectModel:
    """Database entry: an object's features plus its corner geometry."""

    object_id: int
    features: list[Feature]
    corners: np.ndarray  # (4, 2) in object-image coordinates


@dataclass(frozen=True, eq=False)
class ObjectEstimate:
    object_id: int
    corners: np.ndarray  # (4, 2) projected into the frame
    mpr: int = 0

    @property
    def centroid(self) -> np.ndarray:
        return self.corners.mean(axis=0)


@dataclass(frozen=True)
class GroundTruthRecord:
    frame: int
    object_id: int
    cx: float
    cy: float


def average_precision(ranked: RankedList) -> float:
    """AP = sum over ranks of precision@k * relevance(k), divided by R."""
    if ranked.total_relevant < 1:
        raise ValueError("average precision undefined for a frame with no relevant items")
    rel = np.asarray(ranked.relevance, np.float64)
    if rel.size == 0:
        return 0.0
    precision = np.cumsum(rel) / np.arange(1, rel.size + 1)
    return float((precision * rel).sum() / ranked.total_relevant)


def sequence_ap(per_frame_aps) -> float:
    aps = list(per_frame_aps)
    if not aps:
        raise ValueError("no per-frame AP values to average")
    return float(np.mean(aps))


def mean_average_precision(per_query_aps) -> float:
    aps = list(per_query_aps)
    if not aps:
        raise ValueError("no per-query AP values to average")
    return float(np.mean(aps))


def corner_geometry(width: int, height: int) -> np.ndarray:
    """Corner pixel centers of a width x height object image."""
    return np.array(
        [[0.0, 0.0], [width - 1.0, 0.0], [width - 1.0, height - 1.0], [0.0, height - 1.0]]
    )


def locate_object(
    frame_features: list[Feature],
    database: list[ObjectModel],
    match_cfg: MatchConfig,
) -> ObjectEstimate | None:
    """Database object with the highest MPR against the frame, or None.

    Ties go to the lowest object id; the winner's corners are projected into
    the frame by the verified homography.
    """
    if not database:
        raise ValueError("empty object database")
    best = None
    for obj in sorted(database, key=lambda o: o.object_id):
        h, inliers = match_and_verify(obj.features, frame_features, match_cfg)
        mpr = len(inliers)
        if h is None or mpr == 0:
            continue
        if best is None or mpr > best[0]:
            best = (mpr, obj, h)
    if best is None:
        return None
    mpr, obj, h = best
    return ObjectEstimate(obj.object_id, project_points(h, obj.corners), mpr)


def tracking_accuracy(
    estimates: dict[int, ObjectEstimate | None],
    truth: list[GroundTruthRecord],
    tol: float = TRACKING_TOLERANCE_PX,
) -> float:
    """Fraction of frames with the right object within tol of the true centroid.

    Frames with a missing estimate count as incorrect.
    """
    if not truth:
        raise ValueError("empty ground truth")
    correct = 0
    for rec in truth:
        est = estimates.get(rec.frame)
        if est is None or est.object_id != rec.object_id:
            continue
        c = est.centroid
        if float(np.hypot(c[0] - rec.cx, c[1] - rec.cy)) <= tol:
            correct += 1
    return correct / len(truth)


def save_ground_truth(truth: list[GroundTruthRecord], path) -> None:
    """One whitespace-delimited record per frame: frame id, object id, cx, cy."""
    with open(path, "w") as f:
        for rec in truth:
            f.write(f"{rec.frame} {rec.object_id} {rec.cx:.4f} {rec.cy:.4f}\n")


def load_ground_truth(path) -> list[GroundTruthRecord]:
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"malformed ground-truth record: {line!r}")
        out.append(
            GroundTruthRecord(int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3]))
        )
    return out


def load_relevance(path) -> dict[str, set[str]]:
    """query id -> set of relevant database ids; one query per line."""
    out: dict[str, set[str]] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        out[parts[0]] = set(parts[1:])
    return out
