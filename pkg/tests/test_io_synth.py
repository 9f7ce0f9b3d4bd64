import numpy as np
import pytest
from PIL import Image

from vidfeat.io import load_sequence, write_frame
from vidfeat.synth import (
    SceneObject,
    SceneSpec,
    moving_object_scene,
    multi_object_scene,
    object_texture,
    static_scene,
    synth_sequence,
)


class TestLoadSequence:
    def test_ordered_by_numeric_name(self, tmp_path, rng):
        frames = [rng.integers(0, 256, (24, 32), dtype=np.uint8) for _ in range(3)]
        for i, data in enumerate(frames):
            write_frame(tmp_path / f"{i:03d}.pgm", data)
        loaded = load_sequence(tmp_path)
        assert len(loaded) == 3
        for i, frame in enumerate(loaded):
            assert frame.index == i
            assert np.array_equal(frame.data, frames[i])

    def test_numeric_order_beats_lexicographic(self, tmp_path, rng):
        data = rng.integers(0, 256, (16, 16), dtype=np.uint8)
        write_frame(tmp_path / "frame_10.png", data)
        write_frame(tmp_path / "frame_2.png", (data // 2).astype(np.uint8))
        loaded = load_sequence(tmp_path)
        assert np.array_equal(loaded[0].data, data // 2)

    def test_mixed_dimensions_error_names_file(self, tmp_path, rng):
        write_frame(tmp_path / "000.pgm", rng.integers(0, 256, (16, 16), dtype=np.uint8))
        write_frame(tmp_path / "001.pgm", rng.integers(0, 256, (16, 18), dtype=np.uint8))
        with pytest.raises(ValueError, match="001.pgm"):
            load_sequence(tmp_path)

    def test_color_png_converted_by_luma(self, tmp_path):
        rgb = np.zeros((8, 8, 3), np.uint8)
        rgb[..., 0] = 200  # pure red
        Image.fromarray(rgb, "RGB").save(tmp_path / "0.png")
        frame = load_sequence(tmp_path)[0]
        expected = np.asarray(Image.fromarray(rgb, "RGB").convert("L"))
        assert np.array_equal(frame.data, expected)
        assert 55 <= int(frame.data[0, 0]) <= 65  # ~0.299 * 200

    def test_empty_directory_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            load_sequence(tmp_path)

    def test_unreadable_file_named(self, tmp_path):
        (tmp_path / "000.png").write_bytes(b"not a png")
        with pytest.raises(ValueError, match="000.png"):
            load_sequence(tmp_path)

    @pytest.mark.slow
    def test_200_frame_vga_sequence_loads(self, tmp_path):
        data = np.full((480, 640), 90, np.uint8)
        for i in range(200):
            write_frame(tmp_path / f"{i:05d}.pgm", data)
        frames = load_sequence(tmp_path)
        assert len(frames) == 200
        assert all(f.width == 640 and f.height == 480 for f in frames)


class TestSynth:
    def test_static_scene_bit_identical_frames(self):
        frames, truth = synth_sequence(static_scene(seed=4), 5, (96, 80), seed=4)
        assert truth == []
        for f in frames[1:]:
            assert np.array_equal(f.data, frames[0].data)

    def test_fixed_seed_reproducible(self):
        scene = moving_object_scene((128, 96), velocity=(2.0, 0.0), seed=9)
        a, ta = synth_sequence(scene, 4, (128, 96), seed=9)
        b, tb = synth_sequence(scene, 4, (128, 96), seed=9)
        assert ta == tb
        for fa, fb in zip(a, b):
            assert np.array_equal(fa.data, fb.data)

    def test_integer_velocity_translates_exactly(self):
        scene = SceneSpec(
            objects=(SceneObject(0, (32, 24), (10.0, 20.0), (2.0, 0.0), block=8),)
        )
        frames, truth = synth_sequence(scene, 3, (128, 96), seed=1)
        assert [(t.cx, t.cy) for t in truth] == [
            (10.0 + 15.5, 20.0 + 11.5),
            (12.0 + 15.5, 20.0 + 11.5),
            (14.0 + 15.5, 20.0 + 11.5),
        ]
        # pasted content translates exactly for integer motion
        assert np.array_equal(
            frames[0].data[20:44, 10:42], frames[1].data[20:44, 12:44]
        )

    def test_centroids_advance_by_velocity(self):
        scene = moving_object_scene((128, 96), velocity=(2.0, 0.0), seed=0)
        _, truth = synth_sequence(scene, 5, (128, 96), seed=0)
        for a, b in zip(truth, truth[1:]):
            assert (b.cx - a.cx, b.cy - a.cy) == (2.0, 0.0)

    def test_object_larger_than_frame_rejected(self):
        scene = SceneSpec(objects=(SceneObject(0, (300, 50), (0, 0)),))
        with pytest.raises(ValueError):
            synth_sequence(scene, 2, (128, 96), seed=0)

    def test_minimum_dims_enforced(self):
        with pytest.raises(ValueError):
            synth_sequence(static_scene(), 2, (32, 100), seed=0)

    def test_multi_object_one_at_a_time(self):
        scene = multi_object_scene((128, 96), n_objects=3, frames_per_object=2,
                                   object_size=(40, 30))
        frames, truth = synth_sequence(scene, 6, (128, 96), seed=0)
        assert len(truth) == 6
        assert [t.object_id for t in truth] == [0, 0, 1, 1, 2, 2]

    def test_object_textures_distinct(self):
        scene = multi_object_scene((128, 96), n_objects=2, object_size=(40, 30))
        t0 = object_texture(scene, scene.objects[0], 0)
        t1 = object_texture(scene, scene.objects[1], 0)
        assert t0.shape == (30, 40)
        assert not np.array_equal(t0, t1)

    def test_subpixel_motion_differs_from_integer(self):
        scene = SceneSpec(
            objects=(SceneObject(0, (32, 24), (10.0, 20.0), (0.5, 0.0), block=8),)
        )
        frames, truth = synth_sequence(scene, 2, (128, 96), seed=1)
        assert truth[1].cx - truth[0].cx == 0.5
        assert not np.array_equal(frames[0].data, frames[1].data)
