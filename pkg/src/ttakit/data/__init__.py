from .base import Dataset
from .loaders import (
    load_cifar_binary,
    load_dataset,
    load_idx,
    load_image_dir,
    save_cifar_binary,
)
from .synthetic import PATTERNS, render_sample, synthetic_dataset

__all__ = [
    "Dataset", "load_dataset", "load_cifar_binary", "load_idx",
    "load_image_dir", "save_cifar_binary", "synthetic_dataset",
    "render_sample", "PATTERNS",
]
