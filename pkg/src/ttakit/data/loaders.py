"""Dataset ingestion: CIFAR binary batches, IDX files, class-folder trees.

All loaders normalize pixels to [0, 1] floats with shape [N, C, H, W] and
validate labels into [0, K).  Malformed payloads raise DataError with the
offending byte offset or path.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DataError
from .base import Dataset

__all__ = ["load_dataset", "save_cifar_binary", "load_cifar_binary",
           "load_idx", "load_image_dir"]

_CIFAR_RECORD = 1 + 3 * 32 * 32
IDX_MAGIC_IMAGES = 0x00000803  # 3-D unsigned byte tensor
IDX_MAGIC_LABELS = 0x00000801  # 1-D unsigned byte tensor


def load_dataset(path, format: str, num_classes: int | None = None) -> Dataset:
    """Load a labeled image set in one of the supported on-disk formats."""
    if format == "cifar-binary":
        ds = load_cifar_binary(path)
    elif format == "idx":
        ds = load_idx(path)
    elif format == "image-dir":
        ds = load_image_dir(path)
    else:
        raise ConfigError(f"unknown dataset format {format!r}")
    if num_classes is not None and len(ds) and ds.labels.max() >= num_classes:
        raise DataError(
            f"{path}: label {int(ds.labels.max())} out of range for K={num_classes}")
    return ds


def load_cifar_binary(path) -> Dataset:
    """One record per image: 1 label byte + 3072 pixel bytes (RRR GGG BBB)."""
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) % _CIFAR_RECORD != 0:
        full = len(blob) // _CIFAR_RECORD
        raise DataError(
            f"{path}: truncated payload at byte {full * _CIFAR_RECORD}: "
            f"{len(blob)} bytes is not a multiple of record size {_CIFAR_RECORD}")
    n = len(blob) // _CIFAR_RECORD
    raw = np.frombuffer(blob, dtype=np.uint8).reshape(n, _CIFAR_RECORD)
    labels = raw[:, 0].astype(np.int64)
    images = raw[:, 1:].reshape(n, 3, 32, 32).astype(np.float64) / 255.0
    return Dataset(images, labels)


def save_cifar_binary(dataset: Dataset, path) -> None:
    """Write a dataset of 3x32x32 images in the CIFAR record layout."""
    if dataset.images.shape[1:] != (3, 32, 32):
        raise DataError(
            f"cifar-binary requires 3x32x32 images, got {dataset.images.shape[1:]}")
    if len(dataset) and dataset.labels.max() > 255:
        raise DataError("cifar-binary labels must fit one byte")
    pix = np.clip(np.round(dataset.images * 255.0), 0, 255).astype(np.uint8)
    rec = np.empty((len(dataset), _CIFAR_RECORD), dtype=np.uint8)
    rec[:, 0] = dataset.labels.astype(np.uint8)
    rec[:, 1:] = pix.reshape(len(dataset), -1)
    Path(path).write_bytes(rec.tobytes())


def _read_idx(path: Path) -> np.ndarray:
    blob = path.read_bytes()
    if len(blob) < 4:
        raise DataError(f"{path}: truncated IDX header at byte 0")
    magic = struct.unpack(">I", blob[:4])[0]
    if magic == IDX_MAGIC_IMAGES:
        ndim = 3
    elif magic == IDX_MAGIC_LABELS:
        ndim = 1
    else:
        raise DataError(f"{path}: bad IDX magic 0x{magic:08x} at byte 0")
    header = 4 + 4 * ndim
    if len(blob) < header:
        raise DataError(f"{path}: truncated IDX dimension header at byte {len(blob)}")
    dims = struct.unpack(f">{ndim}I", blob[4:header])
    expected = int(np.prod(dims))
    if len(blob) - header < expected:
        raise DataError(
            f"{path}: truncated IDX payload at byte {len(blob)} "
            f"(expected {header + expected} bytes)")
    return np.frombuffer(blob, dtype=np.uint8, count=expected, offset=header).reshape(dims)


def load_idx(path) -> Dataset:
    """Load an IDX image/label file pair.

    ``path`` may be a directory holding exactly one images file (magic
    0x00000803) and one labels file (magic 0x00000801), or the images file
    itself with the labels file found by the usual name substitution.
    """
    path = Path(path)
    if path.is_dir():
        idx_files = sorted(p for p in path.iterdir() if "idx" in p.name or p.suffix == ".idx")
        images_path = labels_path = None
        for p in idx_files:
            magic = struct.unpack(">I", p.read_bytes()[:4])[0] if p.stat().st_size >= 4 else 0
            if magic == IDX_MAGIC_IMAGES:
                images_path = p
            elif magic == IDX_MAGIC_LABELS:
                labels_path = p
        if images_path is None or labels_path is None:
            raise DataError(f"{path}: need one IDX images file and one IDX labels file")
    else:
        images_path = path
        labels_path = Path(str(path).replace("images", "labels").replace("idx3", "idx1"))
        if labels_path == images_path or not labels_path.exists():
            raise DataError(f"cannot find labels file for {path}")
    images_raw = _read_idx(images_path)
    labels = _read_idx(labels_path)
    if images_raw.ndim != 3:
        raise DataError(f"{images_path}: expected 3-D image tensor")
    if labels.shape[0] != images_raw.shape[0]:
        raise DataError(
            f"{path}: {images_raw.shape[0]} images but {labels.shape[0]} labels")
    images = images_raw[:, None, :, :].astype(np.float64) / 255.0
    return Dataset(images, labels.astype(np.int64))


def load_image_dir(path) -> Dataset:
    """Class subfolders of images; labels follow sorted folder-name order."""
    from PIL import Image

    path = Path(path)
    if not path.is_dir():
        raise DataError(f"{path}: not a directory")
    class_dirs = sorted(p for p in path.iterdir() if p.is_dir())
    if not class_dirs:
        raise DataError(f"{path}: no class subfolders")
    images: list[np.ndarray] = []
    labels: list[int] = []
    for label, cdir in enumerate(class_dirs):
        for img_path in sorted(cdir.iterdir()):
            if img_path.is_dir():
                continue
            try:
                with Image.open(img_path) as im:
                    arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
            except Exception as e:
                raise DataError(f"{img_path}: cannot decode image: {e}") from e
            images.append(arr.transpose(2, 0, 1))
            labels.append(label)
    if not images:
        raise DataError(f"{path}: class folders contain no images")
    shapes = {im.shape for im in images}
    if len(shapes) != 1:
        raise DataError(f"{path}: images have mixed shapes {sorted(shapes)}")
    return Dataset(np.stack(images), np.asarray(labels),
                   class_names=tuple(d.name for d in class_dirs))
