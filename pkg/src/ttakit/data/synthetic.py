"""Bundled synthetic 10-class image set (3x32x32).

Classes are colored pattern blobs: five fill patterns (solid, ring,
horizontal stripes, vertical stripes, checker) times two palettes
(warm-on-cool, cool-on-warm).  Position, size, stripe phase, colors,
brightness and a little pixel noise are jittered per sample, so a small
CNN generalizes without saturating, and noise/blur corruptions cause a
measurable accuracy loss.

Every image is drawn from its own counter-based sub-stream, so the set is
reproducible item-by-item regardless of generation order.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..rng import SeededRng
from .base import Dataset

__all__ = ["PATTERNS", "synthetic_dataset", "render_sample"]

PATTERNS = ("solid", "ring", "hstripes", "vstripes", "checker")
NUM_CLASSES = 10
_SIZE = 32

_WARM = np.array([0.62, 0.46, 0.34])
_COOL = np.array([0.34, 0.44, 0.58])


def _soft_disk(yy, xx, cy, cx, radius, softness=1.0):
    dist = np.sqrt((yy - cy) ** 2 + (xx - cx) ** 2)
    return np.clip((radius - dist) / softness + 0.5, 0.0, 1.0)


def render_sample(label: int, rng: SeededRng) -> np.ndarray:
    """One [3, 32, 32] image of the given class, in [0, 1]."""
    pattern = PATTERNS[label // 2]
    swap = bool(label % 2)
    g = rng.generator()

    fg = (_COOL if swap else _WARM) + g.uniform(-0.08, 0.08, size=3)
    bg = (_WARM if swap else _COOL) + g.uniform(-0.08, 0.08, size=3)

    yy, xx = np.mgrid[0:_SIZE, 0:_SIZE].astype(np.float64)
    cy = _SIZE / 2 + g.uniform(-4, 4)
    cx = _SIZE / 2 + g.uniform(-4, 4)
    radius = g.uniform(7.0, 11.0)

    blob = _soft_disk(yy, xx, cy, cx, radius)
    if pattern == "solid":
        fill = np.ones_like(blob)
    elif pattern == "ring":
        inner = _soft_disk(yy, xx, cy, cx, radius - g.uniform(3.0, 4.5))
        fill = 1.0 - inner
    elif pattern == "hstripes":
        period = g.uniform(3.5, 5.5)
        phase = g.uniform(0, period)
        fill = 0.5 + 0.5 * np.sign(np.sin(2 * np.pi * (yy + phase) / period))
    elif pattern == "vstripes":
        period = g.uniform(3.5, 5.5)
        phase = g.uniform(0, period)
        fill = 0.5 + 0.5 * np.sign(np.sin(2 * np.pi * (xx + phase) / period))
    else:  # checker
        period = g.uniform(3.5, 5.5)
        py = g.uniform(0, period)
        px = g.uniform(0, period)
        fill = 0.5 + 0.5 * np.sign(
            np.sin(2 * np.pi * (yy + py) / period) * np.sin(2 * np.pi * (xx + px) / period))

    mask = blob * fill
    texture = ndimage.gaussian_filter(g.uniform(-1, 1, size=(_SIZE, _SIZE)), sigma=1.2)
    img = (bg[:, None, None] * (1.0 - mask)
           + fg[:, None, None] * mask
           + 0.16 * texture)

    # global contrast/brightness jitter, then sensor-style pixel noise
    contrast = g.uniform(0.55, 1.0)
    img = 0.5 + contrast * (img - 0.5)
    img = img * g.uniform(0.85, 1.15)
    img = img + g.normal(0.0, 0.03, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def synthetic_dataset(n: int, seed: int) -> Dataset:
    """A balanced class-cycling set of n samples."""
    root = SeededRng(seed)
    images = np.empty((n, 3, _SIZE, _SIZE), dtype=np.float64)
    labels = np.empty(n, dtype=np.int64)
    for i in range(n):
        label = i % NUM_CLASSES
        images[i] = render_sample(label, root.substream(i))
        labels[i] = label
    # deterministic shuffle so batches are class-mixed
    perm = root.substream(2 ** 32).generator().permutation(n)
    return Dataset(images[perm], labels[perm],
                   class_names=tuple(f"{p}-{'cool' if s else 'warm'}"
                                     for p in PATTERNS for s in (0, 1)))
