"""Labeled image collections used across the harness."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError

__all__ = ["Dataset"]


@dataclass
class Dataset:
    """Images [N, C, H, W] in [0, 1] plus integer labels [N]."""

    images: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4:
            raise DataError(f"images must be [N,C,H,W], got shape {self.images.shape}")
        if self.labels.shape != (self.images.shape[0],):
            raise DataError(
                f"labels shape {self.labels.shape} does not match {self.images.shape[0]} images")

    def __len__(self) -> int:
        return self.images.shape[0]

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if len(self) else 0

    def subset(self, idx) -> "Dataset":
        return Dataset(self.images[idx], self.labels[idx], self.class_names)

    def batches(self, batch_size: int):
        """Yield consecutive (images, labels) slices; last one may be short."""
        for start in range(0, len(self), batch_size):
            sl = slice(start, start + batch_size)
            yield self.images[sl], self.labels[sl]
