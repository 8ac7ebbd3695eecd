"""Running one experiment: corrupt the test set, evaluate the selected
methods per (seed, corruption), and emit metrics rows plus a summary.

Pre-adaptation accuracy is always the source checkpoint evaluated plainly
(running statistics) on the same corrupted batch; post-adaptation accuracy
is whatever the selected method produces.  The ``unadapted`` mode is a
cross-check: its post accuracy equals plain evaluation bitwise.
"""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from ..adapt import run_stream
from ..checkpoint import load_checkpoint
from ..corruptions import CorruptionSpec, build_corrupted_set
from ..data import Dataset, load_dataset, synthetic_dataset
from ..errors import ConfigError
from ..models import Model, predict
from ..rng import SeededRng
from .config import ExperimentConfig
from .metrics import MetricsRecord, render_summary, summarize

__all__ = ["run_experiment", "load_test_dataset", "REFERENCE_RESULTS"]

# Published full-scale reference points (percent accuracy), recorded for
# orientation only; desk-scale runs reproduce orderings, not these values.
REFERENCE_RESULTS = {
    "visda-c": {"unadapted": 44.1, "tent": 60.9,
                "proposed-randaugment": 67.1, "proposed-augmix": 67.2},
    "cifar-10-c": {"unadapted": 56.5, "tent": 81.4,
                   "proposed-randaugment": 80.9, "proposed-augmix": 81.2},
    "cifar-100-c": {"unadapted": 53.2, "tent": 64.5,
                    "proposed-randaugment": 65.4, "proposed-augmix": 65.7},
    "visda-c-loss-terms": {"unadapted": 44.08, "consistency-only": 63.41,
                           "consistency+entropy": 67.1},
}


def load_test_dataset(cfg: ExperimentConfig) -> Dataset:
    if cfg.data_source == "synthetic":
        # test items draw from a disjoint stream of the generator seed
        full = synthetic_dataset(cfg.data_test_size, seed=cfg.data_seed + 1_000_003)
        return full
    return load_dataset(cfg.data_source, cfg.data_format)


def _mode_streams(cfg: ExperimentConfig, mode: str):
    if mode in ("proposed", "tent", "unadapted"):
        return cfg.adaptation()
    if mode == "proposed-randaugment":
        return cfg.adaptation(kind="randaugment")
    if mode == "proposed-augmix":
        return cfg.adaptation(kind="augmix")
    raise ConfigError(f"unknown mode {mode!r}")


def run_experiment(cfg: ExperimentConfig, model: Model | None = None,
                   test_set: Dataset | None = None
                   ) -> tuple[list[MetricsRecord], str]:
    """Returns (metrics rows, rendered summary table)."""
    if model is None:
        path = Path(cfg.model_checkpoint)
        if not path.exists():
            raise ConfigError(f"checkpoint {path} does not exist; train a source "
                              "model first (train-source)")
        model = load_checkpoint(path)
    if test_set is None:
        test_set = load_test_dataset(cfg)

    specs = [CorruptionSpec.parse(s) for s in cfg.corruptions]
    chash = cfg.config_hash()
    records: list[MetricsRecord] = []

    for seed in cfg.seeds:
        corrupted, _ = build_corrupted_set(test_set, specs, seed=seed)
        for spec in specs:
            ds = corrupted[str(spec)]
            batches, labels = _batched(ds, cfg.adapt_batch_size, cfg.data_max_batches)
            pre_acc = [_plain_accuracy(model, b, y) for b, y in zip(batches, labels)]
            for mode in cfg.modes:
                records.extend(
                    _run_mode(cfg, model, mode, spec, seed, chash,
                              batches, labels, pre_acc))
    summary = render_summary(summarize(records))
    return records, summary


def _batched(ds: Dataset, batch_size: int, max_batches: int):
    batches, labels = [], []
    for images, lab in ds.batches(batch_size):
        if images.shape[0] < 2:
            continue  # a trailing singleton cannot be batch-normalized
        batches.append(images)
        labels.append(lab)
        if max_batches and len(batches) >= max_batches:
            break
    return batches, labels


def _plain_accuracy(model: Model, images: np.ndarray, labels: np.ndarray) -> float:
    post = predict(model, images, bn_mode="running-stats")
    return float(np.mean(np.argmax(post.data, axis=1) == labels))


def _run_mode(cfg: ExperimentConfig, model: Model, mode: str, spec: CorruptionSpec,
              seed: int, chash: str, batches, labels, pre_acc
              ) -> list[MetricsRecord]:
    adapt_cfg = _mode_streams(cfg, mode)
    out: list[MetricsRecord] = []
    if mode == "unadapted":
        for b, (images, lab) in enumerate(zip(batches, labels)):
            t0 = time.perf_counter()
            acc = _plain_accuracy(model, images, lab)
            wall = (time.perf_counter() - t0) * 1000.0
            out.append(MetricsRecord(
                config_hash=chash, seed=seed, corruption=spec.kind,
                severity=spec.severity, batch_index=b, mode=mode,
                pre_accuracy=pre_acc[b], post_accuracy=acc,
                step_losses=(), wall_ms=wall))
        return out

    work = model.copy()
    preds, reports = run_stream(work, batches, adapt_cfg, SeededRng(seed),
                                baseline=(mode == "tent"))
    for b, (p, rep, lab) in enumerate(zip(preds, reports, labels)):
        out.append(MetricsRecord(
            config_hash=chash, seed=seed, corruption=spec.kind,
            severity=spec.severity, batch_index=b, mode=mode,
            pre_accuracy=pre_acc[b],
            post_accuracy=float(np.mean(p == lab)),
            step_losses=tuple(rep.step_losses),
            wall_ms=rep.wall_seconds * 1000.0))
    return out
