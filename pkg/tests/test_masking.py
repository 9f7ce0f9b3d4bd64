import numpy as np
import pytest

from vidfeat.detector import Keypoint
from vidfeat.masking import (
    DETECTED,
    PROPAGATED,
    DetectionMask,
    Feature,
    MaskConfig,
    SubsampledMask,
    binning_histogram,
    intensity_diff_mask,
    keypoint_binning_mask,
    merge_features,
    upsample_mask,
    write_mask_pgm,
)
from vidfeat.pyramid import GrayFrame


def feat(x, y, origin=DETECTED, age=0, desc=None):
    if desc is None:
        desc = np.zeros(512, np.uint8)
    return Feature(Keypoint(float(x), float(y), 1.0), desc, origin, age)


class TestIntensityDiffMask:
    def test_identical_layers_all_zero(self, rng):
        data = rng.integers(0, 256, (30, 40), dtype=np.uint8)
        a, b = GrayFrame(data), GrayFrame(data.copy())
        for t_i in (0, 5, 255):
            assert intensity_diff_mask(a, b, t_i).bits.sum() == 0

    def test_single_pixel_change(self):
        a = np.full((30, 40), 100, np.uint8)
        b = a.copy()
        b[7, 11] = 130
        mask = intensity_diff_mask(GrayFrame(a), GrayFrame(b), 20)
        assert mask.bits.sum() == 1
        assert mask.bits[7, 11] == 1

    def test_threshold_is_strict(self):
        a = np.full((8, 8), 100, np.uint8)
        b = np.full((8, 8), 120, np.uint8)
        assert intensity_diff_mask(GrayFrame(a), GrayFrame(b), 20).bits.sum() == 0
        assert intensity_diff_mask(GrayFrame(a), GrayFrame(b), 19).bits.sum() == 64

    def test_operating_threshold_is_default(self):
        assert MaskConfig().t_i == 20.0

    def test_dimension_mismatch_rejected(self):
        a = GrayFrame(np.zeros((8, 8), np.uint8))
        b = GrayFrame(np.zeros((8, 9), np.uint8))
        with pytest.raises(ValueError):
            intensity_diff_mask(a, b, 10)

    def test_coverage_monotone_in_threshold(self, rng):
        a = GrayFrame(rng.integers(0, 256, (60, 80), dtype=np.uint8))
        b = GrayFrame(rng.integers(0, 256, (60, 80), dtype=np.uint8))
        covs = [
            upsample_mask(intensity_diff_mask(a, b, t), (80, 60)).coverage
            for t in (0, 10, 30, 80, 200)
        ]
        assert all(x >= y for x, y in zip(covs, covs[1:]))


class TestBinningMask:
    def test_empty_features_all_zero(self):
        m = keypoint_binning_mask([], (640, 480), (16, 16), 1)
        assert m.bits.sum() == 0

    def test_three_in_one_bin(self):
        feats = [feat(45, 35), feat(47, 33), feat(41, 31)]
        m = keypoint_binning_mask(feats, (640, 480), (16, 16), 2)
        assert m.bits.sum() == 1
        assert m.bits[1, 1] == 1  # (45/40, 35/30) -> col 1, row 1

    def test_corner_feature_lands_in_last_bin(self):
        hist = binning_histogram([feat(639, 479)], (640, 480), (16, 16))
        assert hist[15, 15] == 1
        assert hist.sum() == 1

    def test_histogram_conservation(self, rng):
        for _ in range(100):
            n = int(rng.integers(0, 200))
            feats = [
                feat(float(rng.uniform(0, 640)), float(rng.uniform(0, 480)))
                for _ in range(n)
            ]
            hist = binning_histogram(feats, (640, 480), (16, 16))
            assert hist.sum() == n

    def test_out_of_frame_clamped_to_edge_bin(self):
        hist = binning_histogram([feat(-5, 700)], (640, 480), (16, 16))
        assert hist[15, 0] == 1

    def test_coverage_monotone_in_t_h(self, rng):
        feats = [
            feat(float(rng.uniform(0, 640)), float(rng.uniform(0, 480)))
            for _ in range(300)
        ]
        covs = [
            keypoint_binning_mask(feats, (640, 480), (16, 16), t).bits.mean()
            for t in (1, 2, 3, 5)
        ]
        assert all(x >= y for x, y in zip(covs, covs[1:]))

    def test_non_divisible_grid_uses_ceiling_cells(self):
        m = keypoint_binning_mask([feat(99, 99)], (100, 100), (3, 3), 1)
        assert (m.cell_w, m.cell_h) == (34, 34)
        assert m.bits[2, 2] == 1


class TestUpsample:
    def test_single_cell_ones(self):
        m = SubsampledMask(np.ones((1, 1), np.uint8))
        full = upsample_mask(m, (64, 48))
        assert full.bits.shape == (48, 64)
        assert full.coverage == 1.0

    def test_checkerboard_block_replication(self):
        m = SubsampledMask(np.array([[1, 0], [0, 1]], np.uint8))
        full = upsample_mask(m, (4, 4))
        expected = np.array(
            [[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 1, 1]], np.uint8
        )
        assert np.array_equal(full.bits, expected)

    def test_top_octave_to_vga_is_8x8_blocks(self, rng):
        bits = rng.integers(0, 2, (60, 80)).astype(np.uint8)
        full = upsample_mask(SubsampledMask(bits), (640, 480))
        assert full.bits.shape == (480, 640)
        for y, x in ((0, 0), (7, 7), (473, 633)):
            assert full.bits[y, x] == bits[y // 8, x // 8]

    def test_pixel_cell_rule(self, rng):
        bits = rng.integers(0, 2, (6, 8)).astype(np.uint8)
        m = SubsampledMask(bits, cell_w=9, cell_h=9)
        full = upsample_mask(m, (70, 50))
        ys, xs = np.indices((50, 70))
        assert np.array_equal(full.bits, bits[ys // 9, xs // 9])

    def test_insufficient_cells_rejected(self):
        m = SubsampledMask(np.ones((2, 2), np.uint8), cell_w=4, cell_h=4)
        with pytest.raises(ValueError):
            upsample_mask(m, (64, 48))


class TestMergeFeatures:
    def test_all_ones_keeps_detected_only(self):
        mask = DetectionMask(np.ones((48, 64), np.uint8))
        det = [feat(5, 5), feat(20, 20)]
        prev = [feat(30, 30, PROPAGATED, 2)]
        out = merge_features(det, prev, mask)
        assert out == det

    def test_all_zeros_propagates_prev_with_age(self):
        mask = DetectionMask(np.zeros((48, 64), np.uint8))
        prev = [feat(30, 30, DETECTED, 0), feat(10, 12, PROPAGATED, 3)]
        out = merge_features([], prev, mask)
        assert [f.origin for f in out] == [PROPAGATED, PROPAGATED]
        assert [f.age for f in out] == [1, 4]
        assert [(f.kp.x, f.kp.y) for f in out] == [(30.0, 30.0), (10.0, 12.0)]

    def test_half_mask_against_rule_oracle(self, rng):
        bits = np.zeros((48, 64), np.uint8)
        bits[:, :32] = 1
        mask = DetectionMask(bits)
        det = [feat(float(rng.uniform(0, 31)), float(rng.uniform(0, 47))) for _ in range(10)]
        prev = [feat(float(rng.uniform(0, 63)), float(rng.uniform(0, 47))) for _ in range(20)]
        out = merge_features(det, prev, mask)
        expected = [d for d in det if bits[int(d.kp.y + 0.5), int(d.kp.x + 0.5)] == 1]
        expected += [p for p in prev if bits[min(int(p.kp.y + 0.5), 47), min(int(p.kp.x + 0.5), 63)] == 0]
        assert len(out) == len(expected)
        for got, exp in zip(out, expected):
            assert (got.kp.x, got.kp.y) == (exp.kp.x, exp.kp.y)

    def test_partition_accounting(self, rng):
        bits = rng.integers(0, 2, (48, 64)).astype(np.uint8)
        mask = DetectionMask(bits)
        det = [feat(float(rng.uniform(0, 63)), float(rng.uniform(0, 47))) for _ in range(25)]
        det = [d for d in det if bits[int(d.kp.y + 0.5), int(d.kp.x + 0.5)] == 1]
        prev = [feat(float(rng.uniform(0, 63)), float(rng.uniform(0, 47))) for _ in range(40)]
        out = merge_features(det, prev, mask)
        n_det = sum(1 for f in out if f.origin == DETECTED)
        n_prop = sum(1 for f in out if f.origin == PROPAGATED)
        gated_prev = sum(
            1 for p in prev if bits[int(p.kp.y + 0.5), int(p.kp.x + 0.5)] == 0
        )
        assert n_det + n_prop == len(out)
        assert n_det == len(det)
        assert n_prop == gated_prev

    def test_propagation_preserves_descriptor_bits(self, rng):
        desc = rng.integers(0, 2, 512).astype(np.uint8)
        mask = DetectionMask(np.zeros((48, 64), np.uint8))
        out = merge_features([], [feat(10, 10, DETECTED, 0, desc)], mask)
        assert np.array_equal(out[0].desc, desc)
        assert out[0].desc is not None


def test_mask_pgm_dump(tmp_path):
    bits = np.zeros((4, 6), np.uint8)
    bits[1, 2] = 1
    path = tmp_path / "mask.pgm"
    write_mask_pgm(DetectionMask(bits), path)
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n6 4\n255\n")
    assert raw[-24:][8] == 255


def test_mask_config_validation():
    with pytest.raises(ValueError):
        MaskConfig(mode="bogus")
    with pytest.raises(ValueError):
        MaskConfig(grid=(0, 16))
