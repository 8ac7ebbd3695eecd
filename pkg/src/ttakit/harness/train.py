"""Source-model training: plain cross-entropy SGD on a labeled set."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..checkpoint import save_checkpoint
from ..data import Dataset
from ..engine import SgdState, Tensor, clip_min, gradients, log, mean, mul, sgd_step, tsum
from ..errors import NumericError
from ..losses import LOG_EPS
from ..models import Model, build_model, predict
from ..rng import SeededRng

__all__ = ["train_source_model", "evaluate"]


def _cross_entropy(posteriors: Tensor, labels: np.ndarray, num_classes: int) -> Tensor:
    # -mean log p[label]; the one-hot mask does the gather
    onehot = np.zeros((labels.shape[0], num_classes))
    onehot[np.arange(labels.shape[0]), labels] = 1.0
    picked = tsum(mul(Tensor(onehot), log(clip_min(posteriors, LOG_EPS))), axis=-1)
    return -mean(picked)


def evaluate(model: Model, dataset: Dataset, bn_mode: str = "running-stats",
             batch_size: int = 256) -> float:
    """Classification accuracy over the whole set."""
    correct = 0
    for images, labels in dataset.batches(batch_size):
        post = predict(model, images, bn_mode=bn_mode)
        correct += int(np.sum(np.argmax(post.data, axis=1) == labels))
    return correct / len(dataset)


def train_source_model(dataset: Dataset, arch: str, seed: int,
                       epochs: int = 8, lr: float = 0.05, momentum: float = 0.9,
                       weight_decay: float = 5e-4, batch_size: int = 64,
                       out_dir=None) -> tuple[Model, dict]:
    """Train from a seeded initialization; optionally persist checkpoint + log.

    Deterministic given (dataset, arch, seed, recipe).  Raises NumericError
    if the loss diverges to NaN, after writing the log when out_dir is set.
    """
    num_classes = dataset.num_classes
    in_shape = dataset.images.shape[1:]
    model = build_model(arch, seed=seed, in_shape=in_shape, num_classes=num_classes)
    state = SgdState(lr=lr, momentum=momentum, weight_decay=weight_decay)
    rng = SeededRng(seed, path=(977,))
    history: dict = {"arch": arch, "seed": seed, "epochs": epochs, "lr": lr,
                     "momentum": momentum, "weight_decay": weight_decay,
                     "batch_size": batch_size, "epoch_loss": [], "epoch_accuracy": []}

    n = len(dataset)
    for epoch in range(epochs):
        perm = rng.substream(epoch).generator().permutation(n)
        losses = []
        correct = 0
        for start in range(0, n, batch_size):
            idx = perm[start:start + batch_size]
            if idx.size < 2:
                continue  # train-stats batchnorm needs >= 2 samples
            images = dataset.images[idx]
            labels = dataset.labels[idx]
            model.set_requires_grad(model.params, True)
            try:
                post = model.forward(Tensor(images), bn_mode="train-stats",
                                     update_running=True)
                loss = _cross_entropy(post, labels, num_classes)
                value = loss.item()
            except NumericError as e:
                value = float("nan")
                cause = str(e)
            else:
                cause = "loss is NaN"
            if not np.isfinite(value):
                history["diverged_at"] = {"epoch": epoch, "batch_start": int(start)}
                if out_dir is not None:
                    _write_log(history, out_dir)
                raise NumericError(
                    f"training diverged at epoch {epoch}, batch {start}: {cause}")
            losses.append(value)
            grads = gradients(loss, model.params)
            sgd_step(model.params, grads, state)
            model.set_requires_grad(model.params, False)
            correct += int(np.sum(np.argmax(post.data, axis=1) == labels))
        history["epoch_loss"].append(float(np.mean(losses)) if losses else None)
        history["epoch_accuracy"].append(correct / n)

    history["final_train_accuracy"] = evaluate(model, dataset)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        save_checkpoint(model, out_dir / "source.ckpt")
        _write_log(history, out_dir)
    return model, history


def _write_log(history: dict, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "train_log.json").write_text(json.dumps(history, indent=2),
                                            encoding="utf-8")
