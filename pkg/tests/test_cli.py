import csv
import json

import pytest

from vidfeat.cli import main
from vidfeat.io import write_frame
from vidfeat.synth import moving_object_scene, object_texture, synth_sequence


@pytest.fixture(scope="module")
def sequence_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("seq")
    scene = moving_object_scene((128, 96), object_frac=0.2, velocity=(4.0, 0.0), seed=11)
    frames, _ = synth_sequence(scene, 5, (128, 96), seed=11)
    for f in frames:
        write_frame(root / f"{f.index:04d}.pgm", f.data)
    ref = object_texture(scene, scene.objects[0], 11)
    ref_path = root.parent / "ref.png"
    write_frame(ref_path, ref)
    return root, ref_path


def test_synth_then_extract(tmp_path):
    out = tmp_path / "synth"
    rc = main(["synth", "--preset", "object", "--frames", "4", "--size", "128x96",
               "--seed", "3", "--velocity", "4.0,0.0", "--out", str(out)])
    assert rc == 0
    frame_files = sorted((out / "frames").glob("*.pgm"))
    assert len(frame_files) == 4
    assert (out / "truth.txt").exists()
    assert (out / "objects" / "0.png").exists()

    res = tmp_path / "res"
    rc = main(["extract", str(out / "frames"), "--mode", "intensity", "--ti", "15",
               "--threshold", "25", "--out", str(res)])
    assert rc == 0
    with open(res / "frames.csv") as f:
        rows = list(csv.reader(f))
    assert rows[0][0] == "frame"
    assert len(rows) == 5
    assert (res / "features.txt").exists()
    summary = json.loads((res / "frames_summary.json").read_text())
    assert summary["frames"] == 4


def test_extract_with_mask_dump(sequence_dir, tmp_path):
    seq, _ = sequence_dir
    out = tmp_path / "out"
    rc = main(["extract", str(seq), "--mode", "intensity", "--threshold", "25",
               "--dump-masks", "--out", str(out)])
    assert rc == 0
    masks = sorted((out / "masks").glob("*.pgm"))
    assert len(masks) == 5


def test_match_eval(sequence_dir, tmp_path):
    seq, ref = sequence_dir
    out = tmp_path / "out"
    rc = main(["match-eval", str(seq), "--reference", str(ref), "--threshold", "25",
               "--out", str(out)])
    assert rc == 0
    with open(out / "match_eval.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 5
    assert all(row["accuracy"] != "" for row in rows)
    mprs = [float(row["accuracy"]) for row in rows]
    assert max(mprs) > 0  # reference object is present in the frames


def test_sweep(sequence_dir, tmp_path):
    seq, _ = sequence_dir
    out = tmp_path / "out"
    rc = main(["sweep", str(seq), "--mode", "intensity", "--values", "10,20,30",
               "--threshold", "25", "--out", str(out)])
    assert rc == 0
    data = json.loads((out / "sweep_summary.json").read_text())
    assert len(data["sweep"]) == 3
    assert all("mean_t_total_ms" in p and "mean_preserved" in p for p in data["sweep"])


def test_sweep_requires_masked_mode(sequence_dir, tmp_path):
    seq, _ = sequence_dir
    rc = main(["sweep", str(seq), "--mode", "none", "--values", "10",
               "--out", str(tmp_path)])
    assert rc == 2


def test_diverge(sequence_dir, tmp_path):
    seq, _ = sequence_dir
    out = tmp_path / "out"
    rc = main(["diverge", str(seq), "--mode", "intensity", "--ti", "15",
               "--threshold", "25", "--out", str(out)])
    assert rc == 0
    with open(out / "divergence.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 5
    assert float(rows[0]["preserved"]) == 1.0  # frame 0 runs full in both


def test_track_eval(tmp_path):
    synth_out = tmp_path / "scene"
    rc = main(["synth", "--preset", "multi", "--frames", "6", "--size", "192x160",
               "--n-objects", "3", "--velocity", "2.0,1.0", "--seed", "5",
               "--out", str(synth_out)])
    assert rc == 0
    out = tmp_path / "eval"
    rc = main(["track-eval", str(synth_out / "frames"),
               "--objects", str(synth_out / "objects"),
               "--truth", str(synth_out / "truth.txt"),
               "--threshold", "25", "--out", str(out)])
    assert rc == 0
    with open(out / "track_eval.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 6
    assert all(row["accuracy"] in ("0", "1") for row in rows)
    # the synthetic objects are distinctive: most frames must actually track
    summary = json.loads((out / "track_eval_summary.json").read_text())
    assert summary["mean_accuracy"] >= 0.8


def test_retrieval_eval(tmp_path):
    # two query sequences, each showing one of two database textures
    scene0 = moving_object_scene((128, 96), object_frac=0.25, velocity=(2.0, 0.0), seed=21)
    scene1 = moving_object_scene((128, 96), object_frac=0.25, velocity=(2.0, 0.0), seed=22)
    db = tmp_path / "db"
    db.mkdir()
    write_frame(db / "obj_a.png", object_texture(scene0, scene0.objects[0], 21))
    write_frame(db / "obj_b.png", object_texture(scene1, scene1.objects[0], 22))
    queries = tmp_path / "queries"
    for name, scene, seed in (("q0", scene0, 21), ("q1", scene1, 22)):
        qdir = queries / name
        qdir.mkdir(parents=True)
        frames, _ = synth_sequence(scene, 3, (128, 96), seed=seed)
        for f in frames:
            write_frame(qdir / f"{f.index:03d}.pgm", f.data)
    rel = tmp_path / "relevance.txt"
    rel.write_text("q0 obj_a\nq1 obj_b\n")
    out = tmp_path / "out"
    rc = main(["retrieval-eval", "--queries", str(queries), "--database", str(db),
               "--relevance", str(rel), "--threshold", "25", "--out", str(out)])
    assert rc == 0
    result = json.loads((out / "retrieval_eval.json").read_text())
    assert set(result["per_query"]) == {"q0", "q1"}
    assert result["map"] == 1.0  # each query's own object ranks first


def test_config_file_precedence(sequence_dir, tmp_path):
    seq, _ = sequence_dir
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mode": "intensity", "ti": 15.0, "threshold": 25}))
    out = tmp_path / "a"
    rc = main(["extract", str(seq), "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    summary = json.loads((out / "frames_summary.json").read_text())
    assert summary["mean_coverage"] < 1.0  # config file selected intensity mode

    out2 = tmp_path / "b"
    rc = main(["extract", str(seq), "--config", str(cfg), "--mode", "none",
               "--out", str(out2)])  # explicit flag beats the config file
    assert rc == 0
    summary2 = json.loads((out2 / "frames_summary.json").read_text())
    assert summary2["mean_coverage"] == 1.0


def test_config_file_rejects_unknown_keys(sequence_dir, tmp_path):
    seq, _ = sequence_dir
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus_knob": 1}))
    with pytest.raises(SystemExit):
        main(["extract", str(seq), "--config", str(cfg), "--out", str(tmp_path / "x")])
