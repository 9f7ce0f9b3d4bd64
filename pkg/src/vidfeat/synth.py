"""Deterministic synthetic sequences with per-frame ground truth.

Scenes are a textured background plus textured rectangles moving on
prescribed trajectories; sub-pixel positions render via bilinear sampling of
the object texture. The same seed always produces bit-identical frames, so
tests and benchmarks are fully reproducible without external datasets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evaluation import GroundTruthRecord
from .pyramid import GrayFrame

MIN_DIMS = 64


@dataclass(frozen=True)
class SceneObject:
    object_id: int
    size: tuple[int, int]  # (w, h) pixels
    start: tuple[float, float]  # top-left position at its first visible frame
    velocity: tuple[float, float] = (0.0, 0.0)  # pixels per frame
    texture_seed: int = 1
    appear: int = 0  # first visible frame
    vanish: int | None = None  # first frame no longer visible
    block: int = 0  # > 0: hard-edged random blocks of this size instead of blobs
    block_parity: bool = False  # checkerboard offset so adjacent blocks always contrast


@dataclass(frozen=True)
class SceneSpec:
    background_seed: int = 0
    detail: int = 60  # amplitude of the fine texture component
    blob_cell: int = 16  # coarse texture cell size
    objects: tuple[SceneObject, ...] = field(default_factory=tuple)


def _bilinear_upscale(coarse: np.ndarray, shape: tuple[int, int], cell: int) -> np.ndarray:
    h, w = shape
    ys = np.arange(h) / cell
    xs = np.arange(w) / cell
    iy = ys.astype(np.int64)
    ix = xs.astype(np.int64)
    fy = (ys - iy)[:, None]
    fx = (xs - ix)[None, :]
    c = coarse.astype(np.float64)
    v = (
        (1 - fy) * (1 - fx) * c[np.ix_(iy, ix)]
        + (1 - fy) * fx * c[np.ix_(iy, ix + 1)]
        + fy * (1 - fx) * c[np.ix_(iy + 1, ix)]
        + fy * fx * c[np.ix_(iy + 1, ix + 1)]
    )
    return v


def _texture(shape: tuple[int, int], rng: np.random.Generator, detail: int, cell: int) -> np.ndarray:
    h, w = shape
    coarse = rng.integers(50, 206, (h // cell + 2, w // cell + 2))
    base = _bilinear_upscale(coarse, (h, w), cell)
    fine = rng.integers(-detail, detail + 1, (h, w))
    return np.clip(base + fine, 0, 255).astype(np.uint8)


def _block_texture(
    shape: tuple[int, int], rng: np.random.Generator, block: int, parity: bool
) -> np.ndarray:
    h, w = shape
    rows, cols = -(-h // block), -(-w // block)
    if parity:
        cells = rng.integers(0, 80, (rows, cols), dtype=np.int64)
        ii, jj = np.indices((rows, cols))
        cells += 176 * ((ii + jj) % 2)
    else:
        cells = rng.integers(0, 256, (rows, cols), dtype=np.int64)
    full = np.repeat(np.repeat(cells, block, axis=0), block, axis=1)[:h, :w]
    return full.astype(np.uint8)


def object_texture(scene: SceneSpec, obj: SceneObject, seed: int) -> np.ndarray:
    rng = np.random.default_rng([seed, 1000 + obj.texture_seed])
    w, h = obj.size
    if obj.block > 0:
        return _block_texture((h, w), rng, obj.block, obj.block_parity)
    return _texture((h, w), rng, scene.detail, max(4, scene.blob_cell // 2))


def _paste(canvas: np.ndarray, tex: np.ndarray, px: float, py: float) -> None:
    """Composite tex over canvas with its top-left at (px, py), bilinear."""
    th, tw = tex.shape
    h, w = canvas.shape
    x0 = max(int(np.ceil(px)), 0)
    y0 = max(int(np.ceil(py)), 0)
    x1 = min(int(np.floor(px + tw - 1)), w - 1)
    y1 = min(int(np.floor(py + th - 1)), h - 1)
    if x0 > x1 or y0 > y1:
        return
    u = np.arange(x0, x1 + 1) - px
    v = np.arange(y0, y1 + 1) - py
    iu = np.floor(u).astype(np.int64)
    iv = np.floor(v).astype(np.int64)
    fu = (u - iu)[None, :]
    fv = (v - iv)[:, None]
    iu1 = np.minimum(iu + 1, tw - 1)
    iv1 = np.minimum(iv + 1, th - 1)
    t = tex.astype(np.float64)
    block = (
        (1 - fv) * (1 - fu) * t[np.ix_(iv, iu)]
        + (1 - fv) * fu * t[np.ix_(iv, iu1)]
        + fv * (1 - fu) * t[np.ix_(iv1, iu)]
        + fv * fu * t[np.ix_(iv1, iu1)]
    )
    canvas[y0 : y1 + 1, x0 : x1 + 1] = np.clip(np.floor(block + 0.5), 0, 255).astype(np.uint8)


def synth_sequence(
    scene: SceneSpec,
    n_frames: int,
    dims: tuple[int, int],
    seed: int = 0,
) -> tuple[list[GrayFrame], list[GroundTruthRecord]]:
    """Render a scene; returns frames plus one truth record per visible object."""
    w, h = dims
    if w < MIN_DIMS or h < MIN_DIMS:
        raise ValueError(f"frame dimensions must be at least {MIN_DIMS}x{MIN_DIMS}")
    for obj in scene.objects:
        if obj.size[0] > w or obj.size[1] > h:
            raise ValueError(
                f"object {obj.object_id} ({obj.size[0]}x{obj.size[1]}) larger than frame"
            )
    rng = np.random.default_rng([seed, scene.background_seed])
    background = _texture((h, w), rng, scene.detail, scene.blob_cell)
    textures = {o.object_id: object_texture(scene, o, seed) for o in scene.objects}

    frames: list[GrayFrame] = []
    truth: list[GroundTruthRecord] = []
    for n in range(n_frames):
        movers = [
            o
            for o in scene.objects
            if o.appear <= n and (o.vanish is None or n < o.vanish)
        ]
        if movers:
            canvas = background.copy()
            for o in movers:
                steps = n - o.appear
                px = o.start[0] + o.velocity[0] * steps
                py = o.start[1] + o.velocity[1] * steps
                _paste(canvas, textures[o.object_id], px, py)
                truth.append(
                    GroundTruthRecord(
                        n,
                        o.object_id,
                        px + (o.size[0] - 1) / 2.0,
                        py + (o.size[1] - 1) / 2.0,
                    )
                )
            frames.append(GrayFrame(canvas, index=n))
        else:
            frames.append(GrayFrame(background, index=n))
    return frames, truth


def static_scene(seed: int = 0, detail: int = 60) -> SceneSpec:
    return SceneSpec(background_seed=seed, detail=detail)


def moving_object_scene(
    dims: tuple[int, int],
    object_frac: float = 0.25,
    velocity: tuple[float, float] = (3.0, 2.0),
    seed: int = 0,
    detail: int = 60,
) -> SceneSpec:
    """One textured rectangle covering object_frac of the frame, translating."""
    w, h = dims
    ow = int(round(w * np.sqrt(object_frac)))
    oh = int(round(h * np.sqrt(object_frac)))
    obj = SceneObject(
        object_id=0,
        size=(ow, oh),
        start=(w * 0.05, h * 0.05),
        velocity=velocity,
        texture_seed=7,
    )
    return SceneSpec(background_seed=seed, detail=detail, objects=(obj,))


def multi_object_scene(
    dims: tuple[int, int],
    n_objects: int = 3,
    frames_per_object: int = 12,
    velocity: tuple[float, float] = (2.0, 1.0),
    seed: int = 0,
    detail: int = 60,
    object_size: tuple[int, int] | None = None,
    block: int = 0,
) -> SceneSpec:
    """n_objects shown one at a time, each for frames_per_object frames.

    Objects default to blob+noise textures: object identification needs
    distinctive descriptors, and block/checkerboard textures are too
    self-similar (geometric verification locks onto block-shifted
    alignments). Pass block > 0 for parity-block textures when mask
    visibility matters more than identification.
    """
    w, h = dims
    if object_size is None:
        object_size = (int(w * 0.38), int(h * 0.38))
    objs = []
    for i in range(n_objects):
        objs.append(
            SceneObject(
                object_id=i,
                size=object_size,
                start=(w * 0.12, h * 0.12),
                velocity=velocity,
                texture_seed=11 + 13 * i,
                appear=i * frames_per_object,
                vanish=(i + 1) * frames_per_object,
                block=block + 2 * i if block else 0,
                block_parity=block > 0,
            )
        )
    return SceneSpec(background_seed=seed, detail=detail, objects=tuple(objs))
