"""Stochastic image-to-image augmentation samplers.

Images are [C, H, W] float arrays in [0, 1]; every op clamps its output
back into that range and preserves shape.  The op table has 14 entries:

    Identity, AutoContrast, Equalize, Rotate, Solarize, Color, Posterize,
    Contrast, Brightness, Sharpness, ShearX, ShearY, TranslateX, TranslateY

Intensity is an integer level in [1, 30] mapped linearly onto each op's
magnitude range (frozen here for reproducibility):

    Rotate      0 .. 30 degrees         (sign drawn when an rng is given)
    ShearX/Y    0 .. 0.3                (signed)
    TranslateX/Y  0 .. extent/3 pixels  (signed)
    Solarize    threshold 1.0 .. 0.0
    Posterize   8 .. 4 bits
    Color/Contrast/Brightness/Sharpness  factor 1 +/- 0.9*(level/30)

Level 1 is the degenerate end of every range (angle 0, threshold 1,
8 bits, factor ~1).  Two-sided ranges take their sign from the sampler's
random stream; without an rng the positive direction is used, keeping
``apply_op`` deterministic.

Two samplers are provided: composition of n uniformly-chosen ops at
random intensities up to m, and Dirichlet-weighted mixing of short op
chains followed by a Beta blend with the original image.  All randomness
comes from splittable counter-based streams, so (image, policy, seed)
fully determines the output on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .rng import SeededRng

__all__ = [
    "OP_NAMES",
    "AugmentationPolicy",
    "apply_op",
    "rand_augment",
    "augmix",
    "sample_pair",
]

OP_NAMES = (
    "Identity", "AutoContrast", "Equalize", "Rotate", "Solarize", "Color",
    "Posterize", "Contrast", "Brightness", "Sharpness", "ShearX", "ShearY",
    "TranslateX", "TranslateY",
)

MAX_LEVEL = 30

# ops whose magnitude can point either way; the sampler draws the sign
_SIGNED = {"Rotate", "ShearX", "ShearY", "TranslateX", "TranslateY",
           "Color", "Contrast", "Brightness", "Sharpness"}

_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class AugmentationPolicy:
    """Parameters of one augmentation sampler (serializable as aug.* keys)."""

    kind: str = "randaugment"
    m: int = 1          # max intensity level for op composition
    n: int = 1          # number of composed ops
    k: int = 1          # number of mixed chains (aka width)
    alpha: float = 1.0  # Dirichlet / Beta concentration
    depth: int = 3      # max ops per chain
    severity: int = 2   # fixed op intensity inside chains

    def __post_init__(self):
        if self.kind not in ("randaugment", "augmix"):
            raise ConfigError(f"unknown augmentation kind {self.kind!r}")
        if not (1 <= self.m <= MAX_LEVEL):
            raise ConfigError(f"aug.m must be in [1, {MAX_LEVEL}], got {self.m}")
        if self.n < 0:
            raise ConfigError(f"aug.n must be >= 0, got {self.n}")
        if self.k < 1:
            raise ConfigError(f"aug.k must be >= 1, got {self.k}")
        if self.alpha <= 0:
            raise ConfigError(f"aug.alpha must be > 0, got {self.alpha}")
        if self.depth < 1:
            raise ConfigError(f"aug.depth must be >= 1, got {self.depth}")
        if not (1 <= self.severity <= MAX_LEVEL):
            raise ConfigError(
                f"aug.severity must be in [1, {MAX_LEVEL}], got {self.severity}")

    def to_config(self) -> dict[str, object]:
        return {"aug.kind": self.kind, "aug.m": self.m, "aug.n": self.n,
                "aug.k": self.k, "aug.alpha": self.alpha,
                "aug.depth": self.depth, "aug.severity": self.severity}

    @classmethod
    def from_config(cls, cfg: dict[str, object]) -> "AugmentationPolicy":
        base = cls()
        return cls(
            kind=str(cfg.get("aug.kind", base.kind)),
            m=int(cfg.get("aug.m", base.m)),
            n=int(cfg.get("aug.n", base.n)),
            k=int(cfg.get("aug.k", base.k)),
            alpha=float(cfg.get("aug.alpha", base.alpha)),
            depth=int(cfg.get("aug.depth", base.depth)),
            severity=int(cfg.get("aug.severity", base.severity)),
        )


# --- geometry helpers ---------------------------------------------------------


def _bilinear_sample(img: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Sample img[C,H,W] at fractional (ys, xs); zero outside the canvas."""
    c, h, w = img.shape
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    wy = ys - y0
    wx = xs - x0
    out = np.zeros((c, ys.shape[0], ys.shape[1]), dtype=img.dtype)
    for dy, dx, wgt in ((0, 0, (1 - wy) * (1 - wx)), (0, 1, (1 - wy) * wx),
                        (1, 0, wy * (1 - wx)), (1, 1, wy * wx)):
        yy = y0 + dy
        xx = x0 + dx
        valid = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        yc = np.clip(yy, 0, h - 1)
        xc = np.clip(xx, 0, w - 1)
        out += img[:, yc, xc] * (wgt * valid)
    return out


def _affine(img: np.ndarray, inv: np.ndarray) -> np.ndarray:
    """Warp by the inverse map [[a,b,c],[d,e,f]]: out(x,y) = img(a x+b y+c, ...)."""
    _, h, w = img.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    xr = xs - cx
    yr = ys - cy
    src_x = inv[0, 0] * xr + inv[0, 1] * yr + inv[0, 2] + cx
    src_y = inv[1, 0] * xr + inv[1, 1] * yr + inv[1, 2] + cy
    return _bilinear_sample(img, src_y, src_x)


def _smooth3(img: np.ndarray) -> np.ndarray:
    """3x3 smoothing with edge replication (center weight 5, ring weight 1)."""
    pad = np.pad(img, ((0, 0), (1, 1), (1, 1)), mode="edge")
    acc = 5.0 * img
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            acc = acc + pad[:, 1 + dy:1 + dy + img.shape[1], 1 + dx:1 + dx + img.shape[2]]
    return acc / 13.0


def _gray(img: np.ndarray) -> np.ndarray:
    if img.shape[0] == 3:
        return np.tensordot(_LUMA, img, axes=([0], [0]))
    return img.mean(axis=0)


# --- the op table --------------------------------------------------------------


def _frac(level: int) -> float:
    return (level - 1) / (MAX_LEVEL - 1)


def _enh_factor(level: int, sign: float) -> float:
    return 1.0 + sign * 0.9 * (level / MAX_LEVEL)


def _blend(a: np.ndarray, b: np.ndarray, factor: float) -> np.ndarray:
    # factor 0 -> a, factor 1 -> b, beyond 1 extrapolates
    return a + factor * (b - a)


def apply_op(x: np.ndarray, op: str, intensity: int,
             rng: SeededRng | None = None) -> np.ndarray:
    """Apply one table op at the given intensity level.

    For two-sided ops the direction is drawn from ``rng``; with no rng the
    positive direction applies, making the call deterministic.
    """
    if op not in OP_NAMES:
        raise ConfigError(f"unknown augmentation op {op!r}")
    if not (1 <= intensity <= MAX_LEVEL):
        raise ConfigError(f"intensity must be in [1, {MAX_LEVEL}], got {intensity}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ConfigError("images must be [C, H, W]")
    sign = rng.sign() if (rng is not None and op in _SIGNED) else 1.0
    out = _OP_FNS[op](x, intensity, sign)
    return np.clip(out, 0.0, 1.0)


def _op_identity(x, level, sign):
    return x


def _op_autocontrast(x, level, sign):
    out = x.copy()
    for c in range(x.shape[0]):
        lo = x[c].min()
        hi = x[c].max()
        if hi > lo:
            out[c] = (x[c] - lo) / (hi - lo)
    return out


def _op_equalize(x, level, sign):
    out = x.copy()
    npix = x.shape[1] * x.shape[2]
    for c in range(x.shape[0]):
        q = np.clip((x[c] * 255.0).astype(np.int64), 0, 255)
        hist = np.bincount(q.ravel(), minlength=256)
        cdf = np.cumsum(hist)
        nz = hist.nonzero()[0]
        if nz.size == 0 or cdf[nz[0]] == npix:
            continue  # constant channel: leave as is
        cdf_min = cdf[nz[0]]
        lut = np.round((cdf - cdf_min) / (npix - cdf_min) * 255.0)
        out[c] = lut[q] / 255.0
    return out


def _op_rotate(x, level, sign):
    angle = sign * np.deg2rad(30.0 * _frac(level))
    if angle == 0.0:
        return x
    c, s = np.cos(angle), np.sin(angle)
    inv = np.array([[c, s, 0.0], [-s, c, 0.0]])
    return _affine(x, inv)


def _op_solarize(x, level, sign):
    threshold = 1.0 - _frac(level)
    return np.where(x > threshold, 1.0 - x, x)


def _op_color(x, level, sign):
    gray = _gray(x)[None, :, :]
    return _blend(np.broadcast_to(gray, x.shape), x, _enh_factor(level, sign))


def _op_posterize(x, level, sign):
    bits = 8 - int(round(4 * _frac(level)))
    q = np.clip((x * 255.0).astype(np.int64), 0, 255)
    q &= ~((1 << (8 - bits)) - 1)
    return q / 255.0


def _op_contrast(x, level, sign):
    m = _gray(x).mean()
    return _blend(np.full_like(x, m), x, _enh_factor(level, sign))


def _op_brightness(x, level, sign):
    return _blend(np.zeros_like(x), x, _enh_factor(level, sign))


def _op_sharpness(x, level, sign):
    return _blend(_smooth3(x), x, _enh_factor(level, sign))


def _op_shear_x(x, level, sign):
    s = sign * 0.3 * _frac(level)
    if s == 0.0:
        return x
    return _affine(x, np.array([[1.0, -s, 0.0], [0.0, 1.0, 0.0]]))


def _op_shear_y(x, level, sign):
    s = sign * 0.3 * _frac(level)
    if s == 0.0:
        return x
    return _affine(x, np.array([[1.0, 0.0, 0.0], [-s, 1.0, 0.0]]))


def _op_translate_x(x, level, sign):
    t = int(round(sign * (x.shape[2] / 3.0) * _frac(level)))
    if t == 0:
        return x
    out = np.zeros_like(x)
    if t > 0:
        out[:, :, t:] = x[:, :, :-t]
    else:
        out[:, :, :t] = x[:, :, -t:]
    return out


def _op_translate_y(x, level, sign):
    t = int(round(sign * (x.shape[1] / 3.0) * _frac(level)))
    if t == 0:
        return x
    out = np.zeros_like(x)
    if t > 0:
        out[:, t:, :] = x[:, :-t, :]
    else:
        out[:, :t, :] = x[:, -t:, :]
    return out


_OP_FNS = {
    "Identity": _op_identity,
    "AutoContrast": _op_autocontrast,
    "Equalize": _op_equalize,
    "Rotate": _op_rotate,
    "Solarize": _op_solarize,
    "Color": _op_color,
    "Posterize": _op_posterize,
    "Contrast": _op_contrast,
    "Brightness": _op_brightness,
    "Sharpness": _op_sharpness,
    "ShearX": _op_shear_x,
    "ShearY": _op_shear_y,
    "TranslateX": _op_translate_x,
    "TranslateY": _op_translate_y,
}


# --- samplers -------------------------------------------------------------------


def rand_augment(x: np.ndarray, m: int, n: int, rng: SeededRng,
                 ops: tuple[str, ...] = OP_NAMES) -> np.ndarray:
    """Compose n ops drawn uniformly (with replacement) at intensities in [1, m]."""
    if m < 1:
        raise ConfigError(f"m must be >= 1, got {m}")
    if n < 0:
        raise ConfigError(f"n must be >= 0, got {n}")
    out = np.asarray(x, dtype=np.float64)
    for _ in range(n):
        local_intensity = int(rng.integers(1, m))
        op = ops[rng.choice_index(len(ops))]
        out = apply_op(out, op, local_intensity, rng=rng)
    return out


def augmix(x: np.ndarray, k: int, alpha: float, depth: int, severity: int,
           rng: SeededRng, ops: tuple[str, ...] = OP_NAMES) -> np.ndarray:
    """Dirichlet-weighted mix of op chains, Beta-blended with the input.

    Each of the k chains composes between 1 and ``depth`` ops (uniform) at
    the fixed ``severity`` level; the result is a convex combination of
    the original image and the mixed chains, clamped to [0, 1].
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if alpha <= 0:
        raise ConfigError(f"alpha must be > 0, got {alpha}")
    x = np.asarray(x, dtype=np.float64)
    weights = rng.dirichlet([alpha] * k)
    x_aug = np.zeros_like(x)
    for i in range(k):
        chain_len = int(rng.integers(1, depth))
        xi = x
        for _ in range(chain_len):
            op = ops[rng.choice_index(len(ops))]
            xi = apply_op(xi, op, severity, rng=rng)
        x_aug += weights[i] * xi
    mix = rng.beta(alpha, alpha)
    return np.clip(mix * x + (1.0 - mix) * x_aug, 0.0, 1.0)


def _draw(x: np.ndarray, policy: AugmentationPolicy, rng: SeededRng) -> np.ndarray:
    if policy.kind == "randaugment":
        return rand_augment(x, policy.m, policy.n, rng)
    return augmix(x, policy.k, policy.alpha, policy.depth, policy.severity, rng)


def sample_pair(x: np.ndarray, policy: AugmentationPolicy,
                rng: SeededRng) -> tuple[np.ndarray, np.ndarray]:
    """Two independent draws from the policy, on disjoint sub-streams."""
    return _draw(x, policy, rng.substream(0)), _draw(x, policy, rng.substream(1))
