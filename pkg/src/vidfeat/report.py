"""CSV / JSON report emission and the feature dump format.

The per-frame CSV column order is frozen so downstream plots stay stable:
frame, n_detected, n_propagated, coverage, t_pyramid_ms, t_mask_ms,
t_detect_ms, t_describe_ms, t_total_ms, accuracy.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .descriptor import descriptor_hex, unpack_descriptor
from .detector import Keypoint
from .masking import Feature
from .pipeline import FrameReport

CSV_COLUMNS = [
    "frame",
    "n_detected",
    "n_propagated",
    "coverage",
    "t_pyramid_ms",
    "t_mask_ms",
    "t_detect_ms",
    "t_describe_ms",
    "t_total_ms",
    "accuracy",
]


def emit_report(reports: list[FrameReport], out_dir, prefix: str = "frames"):
    """Write the per-frame CSV and a summary JSON; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{prefix}.csv"
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        for r in reports:
            w.writerow(
                [
                    r.frame,
                    r.n_detected,
                    r.n_propagated,
                    f"{r.coverage:.6f}",
                    f"{r.t_pyramid_ms:.4f}",
                    f"{r.t_mask_ms:.4f}",
                    f"{r.t_detect_ms:.4f}",
                    f"{r.t_describe_ms:.4f}",
                    f"{r.t_total_ms:.4f}",
                    "" if r.accuracy is None else f"{r.accuracy:.6g}",
                ]
            )
    json_path = out / f"{prefix}_summary.json"
    with open(json_path, "w") as f:
        json.dump(summarize(reports), f, indent=2)
    return csv_path, json_path


def summarize(reports: list[FrameReport]) -> dict:
    if not reports:
        return {"frames": 0}
    acc = [r.accuracy for r in reports if r.accuracy is not None]
    return {
        "frames": len(reports),
        "mean_n_detected": float(np.mean([r.n_detected for r in reports])),
        "mean_n_propagated": float(np.mean([r.n_propagated for r in reports])),
        "mean_coverage": float(np.mean([r.coverage for r in reports])),
        "mean_t_pyramid_ms": float(np.mean([r.t_pyramid_ms for r in reports])),
        "mean_t_mask_ms": float(np.mean([r.t_mask_ms for r in reports])),
        "mean_t_detect_ms": float(np.mean([r.t_detect_ms for r in reports])),
        "mean_t_describe_ms": float(np.mean([r.t_describe_ms for r in reports])),
        "mean_t_total_ms": float(np.mean([r.t_total_ms for r in reports])),
        "mean_accuracy": float(np.mean(acc)) if acc else None,
        "total_dropped": int(sum(r.n_dropped for r in reports)),
    }


def write_sweep_summary(points: list[dict], out_dir, name: str = "sweep_summary.json"):
    """One energy/accuracy point per swept threshold value."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    with open(path, "w") as f:
        json.dump({"sweep": points}, f, indent=2)
    return path


def dump_features(features_per_frame: list[list[Feature]], path) -> None:
    """Text dump: per frame a 'frame <n> <count>' header, then one feature
    per line: x, y, sigma, theta, origin, 64-byte hex descriptor."""
    with open(path, "w") as f:
        for n, feats in enumerate(features_per_frame):
            f.write(f"frame {n} {len(feats)}\n")
            for ft in feats:
                k = ft.kp
                f.write(
                    f"{k.x:.4f} {k.y:.4f} {k.sigma:.4f} {k.theta:.6f} "
                    f"{ft.origin} {descriptor_hex(ft.desc)}\n"
                )


def parse_features(path) -> list[list[Feature]]:
    """Inverse of dump_features (descriptor bits and geometry round-trip)."""
    frames: list[list[Feature]] = []
    lines = Path(path).read_text().splitlines()
    i = 0
    while i < len(lines):
        head = lines[i].split()
        if len(head) != 3 or head[0] != "frame":
            raise ValueError(f"malformed feature dump header: {lines[i]!r}")
        count = int(head[2])
        feats = []
        for j in range(i + 1, i + 1 + count):
            x, y, sigma, theta, origin, hexdesc = lines[j].split()
            feats.append(
                Feature(
                    Keypoint(float(x), float(y), float(sigma), float(theta)),
                    unpack_descriptor(bytes.fromhex(hexdesc)),
                    origin,
                    0,
                )
            )
        frames.append(feats)
        i += 1 + count
    return frames
