"""Benchmark CLI: extraction, threshold sweeps, the three evaluation
protocols, synthetic sequence generation, and masked-vs-full divergence."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .evaluation import (
    ObjectModel,
    RankedList,
    average_precision,
    corner_geometry,
    load_ground_truth,
    load_relevance,
    locate_object,
    mean_average_precision,
    sequence_ap,
    tracking_accuracy,
)
from .io import load_sequence, write_frame
from .masking import MaskConfig, write_mask_pgm
from .matching import MatchConfig, count_mpr
from .pipeline import PipelineConfig, divergence_report, run_pipeline
from .pyramid import GrayFrame
from .report import dump_features, emit_report, summarize, write_sweep_summary
from .synth import (
    moving_object_scene,
    multi_object_scene,
    object_texture,
    static_scene,
    synth_sequence,
)
from .temporal import GopConfig


def _add_pipeline_args(p: argparse.ArgumentParser, threshold: int = 55) -> None:
    p.add_argument("--config", help="JSON file of flag defaults (CLI flags win)")
    p.add_argument("--mode", default="none",
                   choices=["none", "intensity", "binning", "temporal"])
    p.add_argument("--threshold", type=int, default=threshold,
                   help="detection threshold")
    p.add_argument("--octaves", type=int, default=4)
    p.add_argument("--ti", type=float, default=20.0, help="intensity mask threshold")
    p.add_argument("--th", type=int, default=1, help="binning histogram threshold")
    p.add_argument("--grid", default="16x16", help="binning grid, RxC")
    p.add_argument("--per-layer-masks", action="store_true",
                   help="one intensity mask per octave instead of a single mask")
    p.add_argument("--gop-delta", type=int, default=10)
    p.add_argument("--tbm", type=float, default=1800.0, help="SAD match threshold")
    p.add_argument("--tet", type=float, default=1000.0, help="early-termination SAD")
    p.add_argument("--patch-size", type=int, default=16)
    p.add_argument("--tm", type=int, default=102, help="Hamming match radius")
    p.add_argument("--ransac-iters", type=int, default=1000)
    p.add_argument("--reproj-tol", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallel", action="store_true",
                   help="parallelize within-frame stages (frames stay sequential)")
    p.add_argument("--out", default="out", help="output directory")


def _parse_grid(text: str) -> tuple[int, int]:
    rows, _, cols = text.lower().partition("x")
    return int(rows), int(cols)


def _config(args) -> PipelineConfig:
    return PipelineConfig(
        threshold=args.threshold,
        n_octaves=args.octaves,
        mask=MaskConfig(
            mode=args.mode,
            t_i=args.ti,
            t_h=args.th,
            grid=_parse_grid(args.grid),
            per_layer=args.per_layer_masks,
        ),
        gop=GopConfig(
            delta=args.gop_delta,
            patch=args.patch_size,
            t_bm=args.tbm,
            t_et=args.tet,
        ),
        match=MatchConfig(
            t_m=args.tm,
            iters=args.ransac_iters,
            reproj_tol=args.reproj_tol,
            seed=args.seed,
        ),
        seed=args.seed,
        parallel=args.parallel,
    )


def _extract_reference(path: str, cfg: PipelineConfig):
    from PIL import Image

    with Image.open(path) as img:
        if img.mode != "L":
            img = img.convert("L")
        frame = GrayFrame(np.asarray(img, np.uint8))
    feats, _ = run_pipeline([frame], replace(cfg, mask=MaskConfig(mode="none")))
    return frame, feats[0]


def cmd_extract(args) -> int:
    frames = load_sequence(args.sequence)
    cfg = _config(args)
    feats, reports = run_pipeline(frames, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = emit_report(reports, out)
    dump_features(feats, out / "features.txt")
    if args.dump_masks:
        _dump_masks(frames, cfg, out)
    print(f"{len(frames)} frames -> {csv_path}, {json_path}, {out / 'features.txt'}")
    s = summarize(reports)
    print(f"mean extraction time {s['mean_t_total_ms']:.2f} ms/frame, "
          f"mean coverage {s['mean_coverage']:.3f}")
    return 0


def _dump_masks(frames, cfg: PipelineConfig, out: Path) -> None:
    from .masking import DetectionMask
    from .pipeline import _build_mask
    from .pyramid import build_pyramid

    mask_dir = out / "masks"
    mask_dir.mkdir(exist_ok=True)
    prev_pyr = None
    prev_feats: list = []
    all_feats, _ = run_pipeline(frames, cfg)
    for n, frame in enumerate(frames):
        pyr = build_pyramid(frame, cfg.n_octaves)
        if cfg.mask.mode in ("intensity", "binning") and n > 0:
            mask, _ = _build_mask(cfg, frame, pyr, prev_pyr, prev_feats)
        else:
            mask = DetectionMask(np.ones((frame.height, frame.width), np.uint8))
        write_mask_pgm(mask, mask_dir / f"{n:05d}.pgm")
        prev_pyr = pyr
        prev_feats = all_feats[n]


def cmd_sweep(args) -> int:
    frames = load_sequence(args.sequence)
    cfg = _config(args)
    if cfg.mask.mode not in ("intensity", "binning"):
        print("sweep requires --mode intensity or --mode binning", file=sys.stderr)
        return 2
    ref_feats = None
    if args.reference:
        _, ref_feats = _extract_reference(args.reference, cfg)
    values = [float(v) for v in args.values.split(",")]
    points = []
    for v in values:
        if cfg.mask.mode == "intensity":
            run_cfg = replace(cfg, mask=replace(cfg.mask, t_i=v))
        else:
            run_cfg = replace(cfg, mask=replace(cfg.mask, t_h=int(v)))
        feats, reports = run_pipeline(frames, run_cfg)
        point = {
            "threshold": v,
            "mean_t_total_ms": summarize(reports)["mean_t_total_ms"],
            "mean_coverage": summarize(reports)["mean_coverage"],
        }
        if ref_feats is not None:
            mprs = [
                count_mpr(f, ref_feats, run_cfg.match.t_m, run_cfg.match) for f in feats
            ]
            point["mean_mpr"] = float(np.mean(mprs))
        else:
            stats = divergence_report(frames, run_cfg)
            point["mean_preserved"] = float(np.mean([s.preserved for s in stats]))
        points.append(point)
        print(json.dumps(point))
    path = write_sweep_summary(points, args.out)
    print(f"energy-accuracy sweep -> {path}")
    return 0


def cmd_match_eval(args) -> int:
    frames = load_sequence(args.sequence)
    cfg = _config(args)
    _, ref_feats = _extract_reference(args.reference, cfg)
    feats, reports = run_pipeline(frames, cfg)
    for n, r in enumerate(reports):
        r.accuracy = float(count_mpr(feats[n], ref_feats, cfg.match.t_m, cfg.match))
    csv_path, json_path = emit_report(reports, args.out, prefix="match_eval")
    s = summarize(reports)
    print(f"mean MPR {s['mean_accuracy']:.2f}, "
          f"mean extraction time {s['mean_t_total_ms']:.2f} ms/frame")
    print(f"-> {csv_path}, {json_path}")
    return 0


def cmd_retrieval_eval(args) -> int:
    cfg = _config(args)
    relevance = load_relevance(args.relevance)
    db_dir = Path(args.database)
    db_items = sorted(
        p for p in db_dir.iterdir() if p.suffix.lower() in (".png", ".pgm")
    )
    db_feats = {p.stem: _extract_reference(str(p), cfg)[1] for p in db_items}
    query_dirs = sorted(p for p in Path(args.queries).iterdir() if p.is_dir())
    per_query = {}
    for qdir in query_dirs:
        relevant = relevance.get(qdir.name, set())
        frames = load_sequence(qdir)
        feats, _ = run_pipeline(frames, cfg)
        frame_aps = []
        skipped = 0
        for f in feats:
            if not relevant:
                skipped += 1
                continue
            scores = {
                name: count_mpr(f, df, cfg.match.t_m, cfg.match)
                for name, df in db_feats.items()
            }
            ranked = sorted(scores, key=lambda k: (-scores[k], k))
            rel = np.array([1 if name in relevant else 0 for name in ranked])
            frame_aps.append(
                average_precision(RankedList(ranked, rel, len(relevant)))
            )
        if skipped:
            print(f"query {qdir.name}: {skipped} frames without relevant items excluded",
                  file=sys.stderr)
        if frame_aps:
            per_query[qdir.name] = sequence_ap(frame_aps)
    if not per_query:
        print("no scorable queries", file=sys.stderr)
        return 2
    result = {
        "map": mean_average_precision(list(per_query.values())),
        "per_query": per_query,
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "retrieval_eval.json", "w") as f:
        json.dump(result, f, indent=2)
    print(f"MAP {result['map']:.4f} over {len(per_query)} queries "
          f"-> {out / 'retrieval_eval.json'}")
    return 0


def _load_object_db(objects_dir, cfg: PipelineConfig) -> list[ObjectModel]:
    db = []
    for p in sorted(Path(objects_dir).iterdir()):
        if p.suffix.lower() not in (".png", ".pgm"):
            continue
        frame, feats = _extract_reference(str(p), cfg)
        db.append(
            ObjectModel(int(p.stem), feats, corner_geometry(frame.width, frame.height))
        )
    if not db:
        raise ValueError(f"no object images in {objects_dir}")
    return db


def cmd_track_eval(args) -> int:
    frames = load_sequence(args.sequence)
    cfg = _config(args)
    truth = load_ground_truth(args.truth)
    db = _load_object_db(args.objects, cfg)
    feats, reports = run_pipeline(frames, cfg)
    estimates = {n: locate_object(feats[n], db, cfg.match) for n in range(len(frames))}
    for rec in truth:
        est = estimates.get(rec.frame)
        ok = (
            est is not None
            and est.object_id == rec.object_id
            and float(np.hypot(est.centroid[0] - rec.cx, est.centroid[1] - rec.cy))
            <= args.tol
        )
        reports[rec.frame].accuracy = 1.0 if ok else 0.0
    precision = tracking_accuracy(estimates, truth, tol=args.tol)
    csv_path, json_path = emit_report(reports, args.out, prefix="track_eval")
    print(f"tracking precision {precision:.4f} at {args.tol:.0f} px "
          f"-> {csv_path}, {json_path}")
    return 0


def cmd_synth(args) -> int:
    w, h = (int(v) for v in args.size.lower().split("x"))
    vx, vy = (float(v) for v in args.velocity.split(","))
    if args.preset == "static":
        scene = static_scene(seed=args.seed)
    elif args.preset == "object":
        scene = moving_object_scene((w, h), object_frac=args.object_frac,
                                    velocity=(vx, vy), seed=args.seed)
    elif args.preset == "multi":
        scene = multi_object_scene((w, h), n_objects=args.n_objects,
                                   frames_per_object=args.frames // args.n_objects,
                                   velocity=(vx, vy), seed=args.seed)
    else:
        raise ValueError(args.preset)
    frames, truth = synth_sequence(scene, args.frames, (w, h), seed=args.seed)
    out = Path(args.out)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    for f in frames:
        write_frame(out / "frames" / f"{f.index:05d}.pgm", f.data)
    if truth:
        from .evaluation import save_ground_truth

        save_ground_truth(truth, out / "truth.txt")
    if scene.objects:
        (out / "objects").mkdir(exist_ok=True)
        for obj in scene.objects:
            write_frame(out / "objects" / f"{obj.object_id}.png",
                        object_texture(scene, obj, args.seed))
    print(f"{len(frames)} frames -> {out / 'frames'}")
    return 0


def cmd_diverge(args) -> int:
    frames = load_sequence(args.sequence)
    cfg = _config(args)
    if cfg.mask.mode == "none":
        print("diverge requires a masked --mode", file=sys.stderr)
        return 2
    stats = divergence_report(frames, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "divergence.csv"
    with open(path, "w") as f:
        f.write("frame,only_masked,only_full,common,preserved\n")
        for s in stats:
            f.write(f"{s.frame},{s.only_masked},{s.only_full},{s.common},"
                    f"{s.preserved:.6f}\n")
    mean_preserved = float(np.mean([s.preserved for s in stats]))
    print(f"mean preserved fraction {mean_preserved:.4f} -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vidfeat",
        description="Mask-gated video feature extraction benchmark",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract features and timing reports")
    p.add_argument("sequence")
    _add_pipeline_args(p)
    p.add_argument("--dump-masks", action="store_true")
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("sweep", help="threshold sweep for energy-accuracy curves")
    p.add_argument("sequence")
    _add_pipeline_args(p)
    p.add_argument("--values", required=True, help="comma-separated mask thresholds")
    p.add_argument("--reference", help="reference image for MPR accuracy")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("match-eval", help="per-frame MPR against a reference image")
    p.add_argument("sequence")
    _add_pipeline_args(p)
    p.add_argument("--reference", required=True)
    p.set_defaults(fn=cmd_match_eval)

    p = sub.add_parser("retrieval-eval", help="MAP over query sequences")
    _add_pipeline_args(p, threshold=70)  # retrieval-style operating point
    p.add_argument("--queries", required=True, help="directory of query sequence dirs")
    p.add_argument("--database", required=True, help="directory of database images")
    p.add_argument("--relevance", required=True, help="query-id -> relevant-ids file")
    p.set_defaults(fn=cmd_retrieval_eval)

    p = sub.add_parser("track-eval", help="multi-object detection + tracking precision")
    p.add_argument("sequence")
    _add_pipeline_args(p)
    p.add_argument("--objects", required=True, help="directory of object images")
    p.add_argument("--truth", required=True, help="ground-truth file")
    p.add_argument("--tol", type=float, default=10.0)
    p.set_defaults(fn=cmd_track_eval)

    p = sub.add_parser("synth", help="generate a synthetic test sequence")
    p.add_argument("--preset", default="object", choices=["static", "object", "multi"])
    p.add_argument("--frames", type=int, default=30)
    p.add_argument("--size", default="640x480")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--velocity", default="3.0,2.0")
    p.add_argument("--object-frac", type=float, default=0.25)
    p.add_argument("--n-objects", type=int, default=3)
    p.add_argument("--out", default="out")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("diverge", help="masked vs full detection divergence")
    p.add_argument("sequence")
    _add_pipeline_args(p)
    p.set_defaults(fn=cmd_diverge)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        # precedence: CLI flags > config file > built-in defaults
        with open(args.config) as f:
            overrides = json.load(f)
        unknown = set(overrides) - set(vars(args))
        if unknown:
            parser.error(f"unknown keys in {args.config}: {sorted(unknown)}")
        given = sys.argv[1:] if argv is None else argv
        for key, value in overrides.items():
            if f"--{key.replace('_', '-')}" not in given:
                setattr(args, key, value)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
