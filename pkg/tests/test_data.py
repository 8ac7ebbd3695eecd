import struct

import numpy as np
import pytest

from ttakit.data import (
    Dataset,
    load_dataset,
    save_cifar_binary,
    synthetic_dataset,
)
from ttakit.errors import ConfigError, DataError


def test_cifar_binary_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(2, 3, 32, 32)).astype(np.float64) / 255.0
    ds = Dataset(images, np.array([3, 7]))
    path = tmp_path / "two.bin"
    save_cifar_binary(ds, path)
    assert path.stat().st_size == 2 * (1 + 3072)
    loaded = load_dataset(path, "cifar-binary")
    assert loaded.images.shape == (2, 3, 32, 32)
    assert np.array_equal(loaded.labels, [3, 7])
    assert np.array_equal(loaded.images, images)  # /255 grid survives exactly


def test_cifar_binary_truncated(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"\x00" * (3073 + 100))
    with pytest.raises(DataError, match="byte 3073"):
        load_dataset(path, "cifar-binary")


def test_unknown_format_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_dataset(tmp_path, "parquet")


def _write_idx(tmp_path, images, labels):
    imgs = tmp_path / "data-images-idx3-ubyte"
    labs = tmp_path / "data-labels-idx1-ubyte"
    n, h, w = images.shape
    imgs.write_bytes(struct.pack(">IIII", 0x00000803, n, h, w) + images.tobytes())
    labs.write_bytes(struct.pack(">II", 0x00000801, n) + labels.tobytes())
    return imgs


def test_idx_loader(tmp_path):
    rng = np.random.default_rng(1)
    images = rng.integers(0, 256, size=(5, 8, 8)).astype(np.uint8)
    labels = np.array([0, 1, 2, 1, 0], dtype=np.uint8)
    imgs_path = _write_idx(tmp_path, images, labels)

    for source in (imgs_path, tmp_path):
        ds = load_dataset(source, "idx")
        assert ds.images.shape == (5, 1, 8, 8)
        assert np.array_equal(ds.labels, labels)
        assert ds.images.max() <= 1.0


def test_idx_bad_magic(tmp_path):
    path = tmp_path / "weird-idx3-ubyte"
    path.write_bytes(struct.pack(">I", 0x12345678) + b"\x00" * 10)
    with pytest.raises(DataError, match="magic"):
        load_dataset(path, "idx")


def test_idx_truncated_payload(tmp_path):
    path = tmp_path / "short-images-idx3-ubyte"
    path.write_bytes(struct.pack(">IIII", 0x00000803, 4, 8, 8) + b"\x00" * 10)
    labs = tmp_path / "short-labels-idx1-ubyte"
    labs.write_bytes(struct.pack(">II", 0x00000801, 4) + b"\x00" * 4)
    with pytest.raises(DataError, match="truncated"):
        load_dataset(path, "idx")


def test_image_dir_loader(tmp_path):
    from PIL import Image

    rng = np.random.default_rng(2)
    for cls in ("orange", "apple"):  # sorted order: apple=0, orange=1
        d = tmp_path / cls
        d.mkdir()
        for i in range(2):
            arr = rng.integers(0, 256, size=(10, 10, 3)).astype(np.uint8)
            Image.fromarray(arr).save(d / f"{i}.png")
    ds = load_dataset(tmp_path, "image-dir")
    assert ds.images.shape == (4, 3, 10, 10)
    assert ds.class_names == ("apple", "orange")
    assert np.array_equal(ds.labels, [0, 0, 1, 1])


def test_image_dir_without_classes(tmp_path):
    with pytest.raises(DataError):
        load_dataset(tmp_path, "image-dir")


def test_label_out_of_range(tmp_path):
    ds = Dataset(np.zeros((1, 3, 32, 32)), np.array([11]))
    path = tmp_path / "k.bin"
    save_cifar_binary(ds, path)
    with pytest.raises(DataError, match="out of range"):
        load_dataset(path, "cifar-binary", num_classes=10)


def test_synthetic_dataset_reproducible_and_balanced():
    a = synthetic_dataset(40, seed=9)
    b = synthetic_dataset(40, seed=9)
    assert np.array_equal(a.images, b.images)
    assert np.array_equal(a.labels, b.labels)
    assert np.array_equal(np.bincount(a.labels, minlength=10), np.full(10, 4))
    assert a.images.min() >= 0 and a.images.max() <= 1
    c = synthetic_dataset(40, seed=10)
    assert not np.array_equal(a.images, c.images)


def test_dataset_batches():
    ds = synthetic_dataset(10, seed=0)
    batches = list(ds.batches(4))
    assert [b[0].shape[0] for b in batches] == [4, 4, 2]
    assert sum(len(b[1]) for b in batches) == 10
