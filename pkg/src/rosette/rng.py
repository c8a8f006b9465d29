"""Deterministic random streams.

Every image in a dataset owns private streams derived from
(global_seed, image_index, purpose_tag), so any image can be regenerated
in isolation and workers never share generator state. Dataset-scoped
streams (used e.g. for the one-texture-per-dataset policy) are derived
from (global_seed, purpose_tag) alone.

The pinned generator is numpy's PCG64 seeded through SeedSequence; the
derivation below is pure integer arithmetic and stable across platforms.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

# entropy-domain constants keeping image and dataset streams disjoint
_DOMAIN_IMAGE = 1
_DOMAIN_DATASET = 2


def splitmix64(x: int) -> int:
    """One SplitMix64 mixing step (bijective on 64-bit integers)."""
    x = (x + _GAMMA) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def derive_image_seed(global_seed: int, image_index: int) -> int:
    """Pure 64-bit seed for one image.

    Counter-based (hash of seed and index) rather than stream-splitting,
    so parallel workers need no coordination. Bijectivity of the mixer
    guarantees distinct outputs over any sweep of consecutive indices at
    fixed seed, and over distinct seeds at fixed index.
    """
    if image_index < 0:
        raise ValueError(f"image_index must be >= 0, got {image_index}")
    base = splitmix64(global_seed & _MASK64)
    return splitmix64((base + _GAMMA * image_index) & _MASK64)


def _tag_hash(tag: str) -> int:
    return int.from_bytes(hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest(), "big")


class RandomSource:
    """A single-owner uniform variate stream.

    Identified by its entropy words; identical identification yields an
    identical variate sequence. Never share one instance across images.
    """

    def __init__(self, entropy_words: tuple[int, ...], label: str = ""):
        self.label = label
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(entropy_words))))

    @classmethod
    def for_image(cls, global_seed: int, image_index: int, tag: str) -> "RandomSource":
        words = (_DOMAIN_IMAGE, derive_image_seed(global_seed, image_index), _tag_hash(tag))
        return cls(words, label=f"image{image_index}/{tag}")

    @classmethod
    def for_dataset(cls, global_seed: int, tag: str) -> "RandomSource":
        words = (_DOMAIN_DATASET, splitmix64(global_seed & _MASK64), _tag_hash(tag))
        return cls(words, label=f"dataset/{tag}")

    def random(self) -> float:
        """Uniform variate in [0, 1)."""
        return float(self._gen.random())

    def normal(self) -> float:
        """Standard normal variate."""
        return float(self._gen.standard_normal())

    def integer(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError(f"integer() needs n >= 1, got {n}")
        return int(self._gen.integers(n))

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


def sample_uniform(src: RandomSource, lo: float, hi: float) -> float:
    """Draw from U[lo, hi); the degenerate lo == hi interval returns lo."""
    if lo > hi:
        raise ValueError(f"uniform bounds out of order: lo={lo} > hi={hi}")
    if lo == hi:
        return float(lo)
    return float(lo + (hi - lo) * src.random())


_MAX_REJECTIONS = 10_000


def sample_normal(src: RandomSource, mean: float, stddev: float,
                  clamp_lo: float, clamp_hi: float) -> float:
    """Draw from N(mean, stddev^2) truncated by rejection to [clamp_lo, clamp_hi].

    stddev == 0 returns the mean exactly. The rejection loop is capped;
    exceeding the cap signals a pathological clamp configuration.
    """
    if stddev < 0:
        raise ValueError(f"stddev must be >= 0, got {stddev}")
    if clamp_lo > clamp_hi:
        raise ValueError(f"clamp bounds out of order: {clamp_lo} > {clamp_hi}")
    if not (clamp_lo <= mean <= clamp_hi):
        raise ValueError(f"mean {mean} outside clamp interval [{clamp_lo}, {clamp_hi}]")
    if stddev == 0:
        return float(mean)
    for _ in range(_MAX_REJECTIONS):
        x = mean + stddev * src.normal()
        if clamp_lo <= x <= clamp_hi:
            return float(x)
    raise RuntimeError(
        f"truncated-normal rejection exceeded {_MAX_REJECTIONS} draws "
        f"(mean={mean}, stddev={stddev}, clamp=[{clamp_lo}, {clamp_hi}])")
