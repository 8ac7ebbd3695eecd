"""Synthetic test-set corruptions with five severity levels.

Twelve asset-free corruption kinds are registered, covering the noise,
blur and digital families; weather-style corruptions need external
texture assets and are deliberately not provided.  Severity ladders are
frozen in the versioned table below; they were chosen so that accuracy of
the bundled toy models degrades monotonically with severity, not to match
any published archive bit-for-bit.

The JPEG kind is realized as the lossy core of baseline JPEG (YCbCr
conversion, 2x2 chroma subsampling, 8x8 block DCT quantization with the
standard tables); entropy coding is lossless and therefore omitted.  The
manifest records this codec note.

Everything is a pure function of (image, spec, rng stream): corrupting a
set twice with the same seed produces bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy import ndimage

from .data import Dataset
from .errors import ConfigError
from .rng import SeededRng

__all__ = [
    "CORRUPTION_KINDS",
    "LADDER_VERSION",
    "SEVERITY_LADDERS",
    "CorruptionSpec",
    "corrupt",
    "build_corrupted_set",
]

LADDER_VERSION = 1

SEVERITY_LADDERS: dict[str, tuple] = {
    "gaussian_noise": (0.04, 0.06, 0.08, 0.09, 0.10),          # sigma
    "shot_noise": (500, 250, 100, 75, 50),                     # photons at 1.0
    "impulse_noise": (0.01, 0.02, 0.03, 0.05, 0.07),           # replaced fraction
    "defocus_blur": ((0.5, 0.6), (1.0, 0.5), (1.5, 0.4),       # (radius, smooth)
                     (2.0, 0.3), (2.5, 0.2)),
    "glass_blur": ((0.4, 1, 1), (0.4, 1, 2), (0.4, 1, 3),      # (sigma, delta, iters)
                   (0.4, 1, 4), (0.4, 1, 5)),
    "motion_blur": ((3, 0.6), (5, 1.0), (7, 1.4),              # (length, cross sigma)
                    (9, 1.8), (11, 2.2)),
    "zoom_blur": (1.06, 1.11, 1.16, 1.21, 1.26),               # max zoom factor
    "brightness": (0.05, 0.10, 0.15, 0.20, 0.30),              # additive shift
    "contrast": (0.75, 0.5, 0.4, 0.3, 0.15),                   # scale toward mean
    "elastic": ((1.0, 1.4), (1.8, 1.2), (2.6, 1.1),            # (amplitude px, sigma)
                (3.4, 1.0), (4.2, 0.9)),
    "pixelate": (2, 3, 4, 6, 8),                               # block size
    "jpeg": (80, 65, 58, 50, 40),                              # quality
}

CORRUPTION_KINDS = tuple(SEVERITY_LADDERS)


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str
    severity: int

    def __post_init__(self):
        if self.kind not in SEVERITY_LADDERS:
            raise ConfigError(
                f"unregistered corruption kind {self.kind!r}; known: {CORRUPTION_KINDS}")
        if not (1 <= self.severity <= 5):
            raise ConfigError(f"severity must be in [1, 5], got {self.severity}")

    @property
    def param(self):
        return SEVERITY_LADDERS[self.kind][self.severity - 1]

    def __str__(self) -> str:
        return f"{self.kind}:{self.severity}"

    @classmethod
    def parse(cls, text: str) -> "CorruptionSpec":
        kind, _, sev = text.partition(":")
        if not sev:
            raise ConfigError(f"corruption spec {text!r} must look like 'kind:severity'")
        return cls(kind.strip(), int(sev))


def corrupt(x: np.ndarray, spec: CorruptionSpec, rng: SeededRng) -> np.ndarray:
    """Corrupt one [C, H, W] image in [0, 1]; output stays in [0, 1]."""
    x = np.asarray(x, dtype=np.float64)
    out = _KIND_FNS[spec.kind](x, spec.param, rng)
    return np.clip(out, 0.0, 1.0)


def _gaussian_noise(x, sigma, rng):
    return x + rng.normal(0.0, sigma, size=x.shape)


def _shot_noise(x, photons, rng):
    return rng.generator().poisson(x * photons) / float(photons)


def _impulse_noise(x, amount, rng):
    g = rng.generator()
    mask = g.uniform(size=x.shape[1:]) < amount
    salt = g.uniform(size=x.shape[1:]) < 0.5
    out = x.copy()
    out[:, mask & salt] = 1.0
    out[:, mask & ~salt] = 0.0
    return out


def _disk_kernel(radius: float, smooth: float) -> np.ndarray:
    L = max(2, int(np.ceil(radius)) + 1)
    yy, xx = np.mgrid[-L:L + 1, -L:L + 1].astype(np.float64)
    k = (np.sqrt(yy ** 2 + xx ** 2) <= radius).astype(np.float64)
    if smooth > 0:
        k = ndimage.gaussian_filter(k, sigma=smooth)
    return k / k.sum()


def _convolve(x, kernel):
    return np.stack([ndimage.convolve(ch, kernel, mode="reflect") for ch in x])


def _defocus_blur(x, param, rng):
    radius, smooth = param
    return _convolve(x, _disk_kernel(radius, smooth))


def _glass_blur(x, param, rng):
    sigma, delta, iters = param
    g = rng.generator()
    out = np.stack([ndimage.gaussian_filter(ch, sigma) for ch in x])
    h, w = x.shape[1:]
    yy, xx = np.mgrid[0:h, 0:w]
    for _ in range(iters):
        dy = g.integers(-delta, delta + 1, size=(h, w))
        dx = g.integers(-delta, delta + 1, size=(h, w))
        ys = np.clip(yy + dy, 0, h - 1)
        xs = np.clip(xx + dx, 0, w - 1)
        out = out[:, ys, xs]
    return np.stack([ndimage.gaussian_filter(ch, sigma) for ch in out])


def _motion_blur(x, param, rng):
    length, cross = param
    angle = rng.uniform(0.0, np.pi)
    L = length // 2 + 2
    size = 2 * L + 1
    k = np.zeros((size, size))
    steps = np.linspace(-length / 2.0, length / 2.0, 4 * length + 1)
    for t in steps:
        py = L + t * np.sin(angle)
        px = L + t * np.cos(angle)
        y0, x0 = int(np.floor(py)), int(np.floor(px))
        fy, fx = py - y0, px - x0
        for dy, dx, wgt in ((0, 0, (1 - fy) * (1 - fx)), (0, 1, (1 - fy) * fx),
                            (1, 0, fy * (1 - fx)), (1, 1, fy * fx)):
            if 0 <= y0 + dy < size and 0 <= x0 + dx < size:
                k[y0 + dy, x0 + dx] += wgt
    if cross > 0:
        k = ndimage.gaussian_filter(k, sigma=cross)
    return _convolve(x, k / k.sum())


def _zoom_blur(x, max_zoom, rng):
    h, w = x.shape[1:]
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    acc = x.copy()
    zooms = np.arange(1.01, max_zoom + 1e-9, 0.01)
    for z in zooms:
        ys = (yy - cy) / z + cy
        xs = (xx - cx) / z + cx
        coords = np.stack([ys, xs])
        acc += np.stack([ndimage.map_coordinates(ch, coords, order=1, mode="nearest")
                         for ch in x])
    return acc / (len(zooms) + 1)


def _brightness(x, shift, rng):
    return x + shift


def _contrast(x, factor, rng):
    means = x.mean(axis=(1, 2), keepdims=True)
    return (x - means) * factor + means


def _elastic(x, param, rng):
    amplitude, sigma = param
    g = rng.generator()
    h, w = x.shape[1:]
    dy = ndimage.gaussian_filter(g.uniform(-1, 1, size=(h, w)), sigma) * amplitude
    dx = ndimage.gaussian_filter(g.uniform(-1, 1, size=(h, w)), sigma) * amplitude
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    coords = np.stack([yy + dy, xx + dx])
    return np.stack([ndimage.map_coordinates(ch, coords, order=1, mode="reflect")
                     for ch in x])


def _pixelate(x, block, rng):
    h, w = x.shape[1:]
    out = np.empty_like(x)
    for by in range(0, h, block):
        for bx in range(0, w, block):
            tile = x[:, by:by + block, bx:bx + block]
            out[:, by:by + block, bx:bx + block] = tile.mean(axis=(1, 2), keepdims=True)
    return out


# standard baseline JPEG quantization tables (luminance, chrominance)
_Q_LUM = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.float64)
_Q_CHROM = np.array([
    [17, 18, 24, 47, 99, 99, 99, 99],
    [18, 21, 26, 66, 99, 99, 99, 99],
    [24, 26, 56, 99, 99, 99, 99, 99],
    [47, 66, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
    [99, 99, 99, 99, 99, 99, 99, 99],
], dtype=np.float64)

_RGB_TO_YCC = np.array([
    [0.299, 0.587, 0.114],
    [-0.168736, -0.331264, 0.5],
    [0.5, -0.418688, -0.081312],
])
_YCC_TO_RGB = np.linalg.inv(_RGB_TO_YCC)


def _scaled_table(base: np.ndarray, quality: int) -> np.ndarray:
    s = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    return np.clip(np.floor((base * s + 50.0) / 100.0), 1, 255)


def _dct_quantize_channel(ch: np.ndarray, table: np.ndarray) -> np.ndarray:
    h, w = ch.shape
    ph = (8 - h % 8) % 8
    pw = (8 - w % 8) % 8
    padded = np.pad(ch, ((0, ph), (0, pw)), mode="edge")
    out = np.empty_like(padded)
    for by in range(0, padded.shape[0], 8):
        for bx in range(0, padded.shape[1], 8):
            block = padded[by:by + 8, bx:bx + 8]
            coef = sfft.dctn(block, norm="ortho")
            coef = np.round(coef / table) * table
            out[by:by + 8, bx:bx + 8] = sfft.idctn(coef, norm="ortho")
    return out[:h, :w]


def _jpeg(x, quality, rng):
    if x.shape[0] == 3:
        ycc = np.tensordot(_RGB_TO_YCC, x * 255.0 - np.array([0, 0, 0])[:, None, None],
                           axes=([1], [0]))
        y = ycc[0] - 128.0
        cb, cr = ycc[1], ycc[2]
        # 2x2 chroma subsampling via block means
        cb_s = _pixelate(cb[None], 2, rng)[0]
        cr_s = _pixelate(cr[None], 2, rng)[0]
        t_lum = _scaled_table(_Q_LUM, quality)
        t_chr = _scaled_table(_Q_CHROM, quality)
        y = _dct_quantize_channel(y, t_lum) + 128.0
        cb_s = _dct_quantize_channel(cb_s, t_chr)
        cr_s = _dct_quantize_channel(cr_s, t_chr)
        rgb = np.tensordot(_YCC_TO_RGB, np.stack([y, cb_s, cr_s]), axes=([1], [0]))
        return rgb / 255.0
    t_lum = _scaled_table(_Q_LUM, quality)
    return np.stack([(_dct_quantize_channel(ch * 255.0 - 128.0, t_lum) + 128.0) / 255.0
                     for ch in x])


_KIND_FNS = {
    "gaussian_noise": _gaussian_noise,
    "shot_noise": _shot_noise,
    "impulse_noise": _impulse_noise,
    "defocus_blur": _defocus_blur,
    "glass_blur": _glass_blur,
    "motion_blur": _motion_blur,
    "zoom_blur": _zoom_blur,
    "brightness": _brightness,
    "contrast": _contrast,
    "elastic": _elastic,
    "pixelate": _pixelate,
    "jpeg": _jpeg,
}


def build_corrupted_set(dataset: Dataset, specs: list[CorruptionSpec], seed: int
                        ) -> tuple[dict[str, Dataset], list[dict]]:
    """One corrupted copy of the dataset per spec, labels untouched.

    Returns (corrupted sets keyed by "kind:severity", manifest entries).
    Image i of spec j is corrupted on sub-stream (j, i) of the seed, so
    output is independent of iteration order.
    """
    root = SeededRng(seed)
    out: dict[str, Dataset] = {}
    manifest: list[dict] = []
    for j, spec in enumerate(specs):
        images = np.empty_like(dataset.images)
        for i in range(len(dataset)):
            images[i] = corrupt(dataset.images[i], spec, root.substream(j, i))
        out[str(spec)] = Dataset(images, dataset.labels.copy(), dataset.class_names)
        entry = {
            "kind": spec.kind,
            "severity": spec.severity,
            "seed": seed,
            "ladder_version": LADDER_VERSION,
        }
        if spec.kind == "jpeg":
            entry["codec"] = ("dct-quant: YCbCr + 2x2 chroma subsampling + 8x8 DCT "
                              "quantization (baseline JPEG core, no entropy coding)")
        manifest.append(entry)
    return out, manifest
