import numpy as np
import pytest

from ttakit.corruptions import (
    CORRUPTION_KINDS,
    SEVERITY_LADDERS,
    CorruptionSpec,
    build_corrupted_set,
    corrupt,
)
from ttakit.data import Dataset
from ttakit.errors import ConfigError
from ttakit.rng import SeededRng


def test_twelve_kinds_registered():
    assert len(CORRUPTION_KINDS) == 12
    families = {"gaussian_noise", "shot_noise", "impulse_noise",
                "defocus_blur", "glass_blur", "motion_blur", "zoom_blur",
                "brightness", "contrast", "elastic", "pixelate", "jpeg"}
    assert set(CORRUPTION_KINDS) == families


def test_spec_validation():
    with pytest.raises(ConfigError):
        CorruptionSpec("fog", 3)  # weather family is out of scope
    with pytest.raises(ConfigError):
        CorruptionSpec("gaussian_noise", 6)
    assert CorruptionSpec.parse("jpeg:4") == CorruptionSpec("jpeg", 4)
    with pytest.raises(ConfigError):
        CorruptionSpec.parse("jpeg")


def test_gaussian_noise_sigma_ladder():
    # sample-statistics oracle over 100 mid-range images per severity
    ladder = SEVERITY_LADDERS["gaussian_noise"]
    for severity, sigma in enumerate(ladder, start=1):
        stds = []
        for i in range(100):
            base = SeededRng(1).substream(i).uniform(0.3, 0.7, size=(3, 32, 32))
            noisy = corrupt(base, CorruptionSpec("gaussian_noise", severity),
                            SeededRng(2).substream(severity, i))
            stds.append((noisy - base).std())
        measured = float(np.mean(stds))
        assert abs(measured - sigma) / sigma < 0.05, (severity, measured, sigma)


def test_contrast_identity_factor_is_noop():
    # hypothetical level-0: applying the formula with factor 1 returns x
    x = SeededRng(3).uniform(size=(3, 8, 8))
    means = x.mean(axis=(1, 2), keepdims=True)
    assert np.allclose((x - means) * 1.0 + means, x, atol=1e-12)


def test_pixelate_constant_blocks():
    x = SeededRng(4).uniform(size=(3, 32, 32))
    for severity in (1, 3, 5):
        block = SEVERITY_LADDERS["pixelate"][severity - 1]
        out = corrupt(x, CorruptionSpec("pixelate", severity), SeededRng(5))
        for by in range(0, 32, block):
            for bx in range(0, 32, block):
                tile = out[:, by:by + block, bx:bx + block]
                assert np.allclose(tile, tile[:, :1, :1], atol=1e-12)


def test_all_kinds_deterministic_and_in_range():
    x = SeededRng(6).uniform(size=(3, 32, 32))
    for kind in CORRUPTION_KINDS:
        spec = CorruptionSpec(kind, 4)
        a = corrupt(x, spec, SeededRng(7))
        b = corrupt(x, spec, SeededRng(7))
        assert np.array_equal(a, b), kind
        assert a.shape == x.shape
        assert a.min() >= 0.0 and a.max() <= 1.0, kind


def test_monotone_distortion_for_noise_and_blur():
    # measured on images from the domain the ladders were tuned for
    from ttakit.data import synthetic_dataset

    kinds = ("gaussian_noise", "shot_noise", "impulse_noise",
             "defocus_blur", "glass_blur", "motion_blur", "zoom_blur")
    images = list(synthetic_dataset(20, seed=88).images)
    for kind in kinds:
        dist = []
        for severity in range(1, 6):
            total = 0.0
            for i, x in enumerate(images):
                c = corrupt(x, CorruptionSpec(kind, severity),
                            SeededRng(9).substream(severity, i))
                total += float(np.linalg.norm(c - x))
            dist.append(total / len(images))
        assert all(dist[i] <= dist[i + 1] + 1e-9 for i in range(4)), (kind, dist)


def test_build_corrupted_set_contract():
    images = np.stack([SeededRng(10).substream(i).uniform(size=(3, 32, 32))
                       for i in range(6)])
    labels = np.arange(6) % 3
    ds = Dataset(images, labels)

    empty, manifest = build_corrupted_set(ds, [], seed=0)
    assert empty == {} and manifest == []

    specs = [CorruptionSpec("gaussian_noise", 5), CorruptionSpec("jpeg", 2)]
    first, manifest = build_corrupted_set(ds, specs, seed=3)
    second, _ = build_corrupted_set(ds, specs, seed=3)
    for key in ("gaussian_noise:5", "jpeg:2"):
        assert np.array_equal(first[key].images, second[key].images)
        assert np.array_equal(first[key].labels, labels)
    assert manifest[0] == {"kind": "gaussian_noise", "severity": 5, "seed": 3,
                           "ladder_version": 1}
    assert manifest[1]["codec"].startswith("dct-quant")


def test_corrupted_set_differs_from_clean(toy_test_set):
    ds = toy_test_set.subset(np.arange(8))
    sets, _ = build_corrupted_set(ds, [CorruptionSpec("gaussian_noise", 5)], seed=0)
    assert not np.array_equal(sets["gaussian_noise:5"].images, ds.images)
