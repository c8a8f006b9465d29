"""Foreground leaf textures and background plates.

Banks are directories of images loaded in lexicographic order so a bank
is fully determined by its contents. The augmentation suite (flips,
rotation, zoom + crop, optional exposure) runs once per use of a texture
and is driven entirely by the caller's RandomSource, keeping every image
reproducible in isolation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .rng import RandomSource, sample_uniform

log = logging.getLogger(__name__)

_IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}

MIN_TEXTURE_SIDE = 8


class BankError(ValueError):
    pass


class TextureMode(Enum):
    """Texture-assignment policy defining a generated dataset's flavor."""

    PLANT_UNIFORM = "plant"    # one texture shared by all leaves of all plants
    PER_LEAF = "leaf"          # independent choice per leaf (green bank)
    ARBITRARY = "arbitrary"    # independent choice per leaf (arbitrary bank)

    @classmethod
    def from_name(cls, name: str) -> "TextureMode":
        for mode in cls:
            if mode.value == name:
                return mode
        valid = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown texture mode {name!r} (valid: {valid})")


@dataclass(frozen=True)
class TextureImage:
    """8-bit RGB pixels plus the stable identifier (file stem) within a bank."""

    pixels: np.ndarray  # (H, W, 3) uint8
    id: str

    def __post_init__(self):
        h, w = self.pixels.shape[:2]
        if h < MIN_TEXTURE_SIDE or w < MIN_TEXTURE_SIDE:
            raise BankError(f"texture {self.id!r} too small: {w}x{h} (minimum {MIN_TEXTURE_SIDE})")


def load_bank(directory: str | Path) -> list[TextureImage]:
    """Load every decodable image in a directory, ordered lexicographically by stem.

    Undecodable files are skipped with a warning; an error is raised only
    if nothing loads.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise BankError(f"texture bank directory not found: {directory}")
    paths = sorted((p for p in directory.iterdir()
                    if p.is_file() and p.suffix.lower() in _IMAGE_EXTENSIONS),
                   key=lambda p: p.stem)
    if not paths:
        raise BankError(f"no image files in bank directory: {directory}")
    bank = []
    for path in paths:
        try:
            with Image.open(path) as img:
                pixels = np.asarray(img.convert("RGB"), dtype=np.uint8)
            bank.append(TextureImage(pixels=pixels, id=path.stem))
        except (OSError, ValueError, BankError) as exc:
            log.warning("skipping undecodable bank file %s: %s", path, exc)
    if not bank:
        raise BankError(f"no decodable images in bank directory: {directory}")
    ids = [t.id for t in bank]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise BankError(f"duplicate texture ids in {directory}: {dupes}")
    return bank


@dataclass(frozen=True)
class AugmentParams:
    """One sampled augmentation, separable from the stream for replay in tests.

    crop_u/crop_v are raw uniforms in [0,1); they are mapped onto the valid
    offset range only once the post-zoom size is known.
    """

    hflip: bool
    vflip: bool
    rotation: float          # radians, counter-clockwise about center
    zoom: float
    crop_u: float
    crop_v: float
    exposure: float          # channel multiplier; 1.0 = untouched

    @classmethod
    def identity(cls) -> "AugmentParams":
        return cls(False, False, 0.0, 1.0, 0.0, 0.0, 1.0)


def sample_augment_params(src: RandomSource, with_exposure: bool, *,
                          flip_prob: float = 0.5,
                          zoom_range: tuple[float, float] = (0.8, 1.2),
                          exposure_range: tuple[float, float] = (0.7, 1.3)) -> AugmentParams:
    hflip = src.random() < flip_prob
    vflip = src.random() < flip_prob
    rotation = sample_uniform(src, 0.0, 2.0 * math.pi)
    zoom = sample_uniform(src, *zoom_range)
    crop_u = src.random()
    crop_v = src.random()
    exposure = sample_uniform(src, *exposure_range) if with_exposure else 1.0
    return AugmentParams(hflip, vflip, rotation, zoom, crop_u, crop_v, exposure)


def _offset(u: float, extent: int) -> int:
    # map a raw uniform onto {0, ..., extent}
    return min(int(u * (extent + 1)), extent)


def apply_augmentation(pixels: np.ndarray, params: AugmentParams) -> np.ndarray:
    """Apply one sampled augmentation; output dimensions equal input dimensions.

    Rotation uses bilinear resampling with reflection padding. Zoom > 1
    upsamples then randomly crops back; zoom < 1 downsamples then
    reflection-pads back, with the placement taken from crop_u/crop_v.
    """
    h, w = pixels.shape[:2]
    out = pixels
    if params.hflip:
        out = out[:, ::-1]
    if params.vflip:
        out = out[::-1, :]
    if params.rotation != 0.0:
        out = ndimage.rotate(out, math.degrees(params.rotation),
                             reshape=False, order=1, mode="reflect")
    if params.zoom != 1.0:
        nh = max(1, round(h * params.zoom))
        nw = max(1, round(w * params.zoom))
        factors = (nh / h, nw / w) + (1,) * (out.ndim - 2)
        out = ndimage.zoom(out, factors, order=1, mode="reflect", grid_mode=True)
        out = out[:nh, :nw]  # guard against zoom() rounding up
        nh, nw = out.shape[:2]
        if nh >= h and nw >= w:
            top = _offset(params.crop_v, nh - h)
            left = _offset(params.crop_u, nw - w)
            out = out[top:top + h, left:left + w]
        else:
            pad_v = h - nh
            pad_h = w - nw
            top = _offset(params.crop_v, pad_v)
            left = _offset(params.crop_u, pad_h)
            pad = [(top, pad_v - top), (left, pad_h - left)] + [(0, 0)] * (out.ndim - 2)
            out = np.pad(out, pad, mode="reflect")
    if params.exposure != 1.0:
        out = np.clip(np.rint(out.astype(np.float64) * params.exposure), 0, 255)
    out = np.ascontiguousarray(out, dtype=np.uint8)
    assert out.shape[:2] == (h, w)
    return out


def augment_image(src: RandomSource, img: TextureImage, with_exposure: bool, *,
                  flip_prob: float = 0.5,
                  zoom_range: tuple[float, float] = (0.8, 1.2),
                  exposure_range: tuple[float, float] = (0.7, 1.3)) -> TextureImage:
    """Sample augmentation parameters from src and apply them to img."""
    params = sample_augment_params(src, with_exposure, flip_prob=flip_prob,
                                   zoom_range=zoom_range, exposure_range=exposure_range)
    return TextureImage(pixels=apply_augmentation(img.pixels, params), id=img.id)


def assign_textures(src: RandomSource, mode: TextureMode,
                    bank: list[TextureImage], leaf_count: int) -> list[str]:
    """Pick a texture identifier for each leaf under the given policy.

    PLANT_UNIFORM expects a dataset-scoped source: the single draw then
    repeats identically for every plant of the dataset. The per-leaf modes
    expect the image's own stream.
    """
    if not bank:
        raise BankError("texture bank is empty")
    if leaf_count < 0:
        raise ValueError(f"leaf_count must be >= 0, got {leaf_count}")
    if mode is TextureMode.PLANT_UNIFORM:
        chosen = bank[src.integer(len(bank))].id
        return [chosen] * leaf_count
    return [bank[src.integer(len(bank))].id for _ in range(leaf_count)]


def fit_to_frame(pixels: np.ndarray, width: int, height: int) -> np.ndarray:
    """Scale to cover the frame (preserving aspect), then center-crop to it."""
    h, w = pixels.shape[:2]
    scale = max(width / w, height / h)
    nh, nw = max(height, round(h * scale)), max(width, round(w * scale))
    if (nh, nw) != (h, w):
        factors = (nh / h, nw / w) + (1,) * (pixels.ndim - 2)
        pixels = ndimage.zoom(pixels, factors, order=1, mode="reflect", grid_mode=True)
        pixels = pixels[:nh, :nw]
    top = (pixels.shape[0] - height) // 2
    left = (pixels.shape[1] - width) // 2
    return np.ascontiguousarray(pixels[top:top + height, left:left + width], dtype=np.uint8)
