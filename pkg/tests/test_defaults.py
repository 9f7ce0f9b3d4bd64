"""Operating points that the benchmark configurations ship with."""

import numpy as np

from vidfeat.detector import DEFAULT_THRESHOLD, RETRIEVAL_THRESHOLD
from vidfeat.masking import DEFAULT_BINNING_GRID, DEFAULT_INTENSITY_THRESHOLD, MaskConfig
from vidfeat.matching import DEFAULT_MATCH_RADIUS, MatchConfig, count_mpr
from vidfeat.pipeline import PipelineConfig, run_pipeline
from vidfeat.pyramid import GrayFrame
from vidfeat.synth import SceneObject, SceneSpec, object_texture, synth_sequence
from vidfeat.temporal import GopConfig


def test_detector_thresholds():
    assert DEFAULT_THRESHOLD == 55
    assert RETRIEVAL_THRESHOLD == 70
    assert PipelineConfig().threshold == 55
    assert PipelineConfig().n_octaves == 4


def test_mask_defaults():
    assert DEFAULT_INTENSITY_THRESHOLD == 20.0
    assert DEFAULT_BINNING_GRID == (16, 16)
    assert MaskConfig().mode == "none"


def test_gop_defaults():
    cfg = GopConfig()
    assert (cfg.delta, cfg.patch) == (10, 16)
    assert (cfg.t_bm, cfg.t_et) == (1800.0, 1000.0)
    assert (cfg.coarse_window, cfg.coarse_step) == (12.0, 2.0)
    assert (cfg.fine_window, cfg.fine_step) == (1.75, 0.25)


def test_match_defaults():
    assert DEFAULT_MATCH_RADIUS == 102
    cfg = MatchConfig()
    assert cfg.iters == 1000
    assert cfg.reproj_tol == 3.0


def test_masked_mpr_tracks_full_mpr():
    """Against a fixed reference image, the masked pipeline's per-frame MPR
    stays close to full detection's (the relationship, not absolute counts)."""
    dims = (320, 240)
    obj = SceneObject(0, (160, 120), (16.0, 12.0), (4.0, 0.0), texture_seed=5,
                      block=8, block_parity=True)
    scene = SceneSpec(background_seed=4, detail=50, objects=(obj,))
    frames, _ = synth_sequence(scene, 8, dims, seed=4)
    ref = GrayFrame(object_texture(scene, obj, 4))

    cfg_full = PipelineConfig(threshold=40)
    cfg_mask = PipelineConfig(
        threshold=40,
        mask=MaskConfig(mode="intensity", t_i=20.0),
    )
    ref_feats, _ = run_pipeline([ref], cfg_full)
    mc = MatchConfig()

    full_feats, _ = run_pipeline(frames, cfg_full)
    mask_feats, _ = run_pipeline(frames, cfg_mask)
    full_mpr = [count_mpr(f, ref_feats[0], mc.t_m, mc) for f in full_feats]
    mask_mpr = [count_mpr(f, ref_feats[0], mc.t_m, mc) for f in mask_feats]
    assert np.mean(full_mpr) > 20  # the object is actually being matched
    assert np.mean(mask_mpr) >= 0.8 * np.mean(full_mpr)
