"""Per-batch test-time adaptation.

For each test batch: sample two augmentations per item, run three forward
passes (clean + both augmentations), minimize the consistency-plus-entropy
objective over a few SGD steps on the selected parameter set, then predict
on the clean batch with the updated parameters.

Semantics pinned here:

* All forward passes inside the loop, including the final prediction and
  the recorded pre-adaptation baseline, use ``cfg.bn_mode`` (train-stats
  by default).  With steps=0 or lr=0 the loop is therefore bitwise
  identical to the unadapted model evaluated in that mode.
* Augmentation pairs are re-sampled fresh at every step, from sub-streams
  keyed by (step, item), so results do not depend on batch order.
* ``episodic`` streams restore the source parameters (and buffers) before
  every batch; ``online`` carries the adapted state forward.  Momentum
  buffers always start at zero for each batch.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .augment import AugmentationPolicy, sample_pair
from .engine import SgdState, Tensor, gradients, sgd_step
from .errors import ConfigError, NumericError
from .losses import total_loss
from .models import Model, predict
from .rng import SeededRng

__all__ = ["AdaptationConfig", "AdaptationReport", "adapt_batch", "run_stream",
           "tent_baseline", "select_params"]


@dataclass(frozen=True)
class AdaptationConfig:
    """Optimizer and loop hyperparameters; defaults are the published ones."""

    steps: int = 5
    lr: float = 1e-4
    momentum: float = 0.9
    weight_decay: float = 5e-4
    batch_size: int = 64
    param_set: str = "all"            # all | bn_affine_only
    reset_policy: str = "episodic"    # episodic | online
    bn_mode: str = "train-stats"      # train-stats | running-stats
    cons_weight: float = 1.0
    ent_weight: float = 1.0
    policy: AugmentationPolicy = field(default_factory=AugmentationPolicy)

    def __post_init__(self):
        if self.steps < 0:
            raise ConfigError(f"adapt.steps must be >= 0, got {self.steps}")
        if self.lr < 0:
            raise ConfigError(f"adapt.lr must be >= 0, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"adapt.batch_size must be >= 1, got {self.batch_size}")
        if self.param_set not in ("all", "bn_affine_only"):
            raise ConfigError(f"unknown param_set {self.param_set!r}")
        if self.reset_policy not in ("episodic", "online"):
            raise ConfigError(f"unknown reset_policy {self.reset_policy!r}")
        if self.bn_mode not in ("train-stats", "running-stats"):
            raise ConfigError(f"unknown bn_mode {self.bn_mode!r}")


@dataclass
class AdaptationReport:
    step_losses: list[float]
    pre_predictions: np.ndarray       # posteriors of the incoming model, cfg.bn_mode
    post_predictions: np.ndarray      # posteriors after adaptation, cfg.bn_mode
    param_delta_norm: float
    wall_seconds: float = 0.0


def select_params(model: Model, param_set: str) -> dict[str, Tensor]:
    if param_set == "all":
        return dict(model.params)
    selected = {k: v for k, v in model.params.items() if k in model.bn_affine}
    if not selected:
        raise ConfigError(
            f"param_set={param_set!r} selects nothing: {model.arch} has no "
            "batchnorm affine parameters")
    return selected


def adapt_batch(model: Model, batch: np.ndarray, cfg: AdaptationConfig,
                rng: SeededRng) -> tuple[Model, np.ndarray, AdaptationReport]:
    """Adapt the model to one unlabeled batch.

    Returns (the same model, now updated in place; argmax predictions on
    the clean batch; a report with the loss trace and parameter movement).
    """
    t0 = time.perf_counter()
    batch = np.asarray(batch, dtype=np.float64)
    n = batch.shape[0]

    pre = predict(model, batch, bn_mode=cfg.bn_mode)
    pre_posteriors = pre.data.copy()

    tuned = select_params(model, cfg.param_set)
    before = {k: v.data.astype(np.float64).copy() for k, v in tuned.items()}
    state = SgdState(lr=cfg.lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay)
    step_losses: list[float] = []

    model.set_requires_grad(tuned, True)
    try:
        for step in range(cfg.steps):
            aug1 = np.empty_like(batch)
            aug2 = np.empty_like(batch)
            for i in range(n):
                aug1[i], aug2[i] = sample_pair(batch[i], cfg.policy,
                                               rng.substream(step, i))
            p_x = predict(model, batch, bn_mode=cfg.bn_mode)
            p_1 = predict(model, Tensor(aug1), bn_mode=cfg.bn_mode)
            p_2 = predict(model, Tensor(aug2), bn_mode=cfg.bn_mode)
            loss = total_loss(p_x, p_1, p_2,
                              cons_weight=cfg.cons_weight, ent_weight=cfg.ent_weight)
            value = loss.item()
            if not np.isfinite(value):
                last = step_losses[-1] if step_losses else float("nan")
                raise NumericError(
                    f"non-finite adaptation loss at step {step} "
                    f"(last finite loss: {last})")
            step_losses.append(value)
            grads = gradients(loss, tuned)
            sgd_step(tuned, grads, state)
    finally:
        model.set_requires_grad(tuned, False)

    post = predict(model, batch, bn_mode=cfg.bn_mode)
    delta = 0.0
    for k, prev in before.items():
        diff = tuned[k].data.astype(np.float64) - prev
        delta += float(np.sum(diff * diff))
    report = AdaptationReport(
        step_losses=step_losses,
        pre_predictions=pre_posteriors,
        post_predictions=post.data.copy(),
        param_delta_norm=float(np.sqrt(delta)),
        wall_seconds=time.perf_counter() - t0,
    )
    return model, np.argmax(post.data, axis=1), report


def tent_baseline(model: Model, batch: np.ndarray, cfg: AdaptationConfig,
                  rng: SeededRng) -> tuple[Model, np.ndarray, AdaptationReport]:
    """Entropy-only tuning of the batchnorm affine parameters."""
    baseline_cfg = replace(cfg, param_set="bn_affine_only",
                           cons_weight=0.0, ent_weight=1.0)
    return adapt_batch(model, batch, baseline_cfg, rng)


def _batch_key(batch: np.ndarray) -> tuple[int, int]:
    """A stable 64-bit content key, split into two stream indices."""
    digest = hashlib.blake2b(np.ascontiguousarray(batch).tobytes(),
                             digest_size=8).digest()
    value = int.from_bytes(digest, "little")
    return value >> 32, value & 0xFFFFFFFF


def run_stream(model: Model, batches, cfg: AdaptationConfig, rng: SeededRng,
               baseline: bool = False
               ) -> tuple[list[np.ndarray], list[AdaptationReport]]:
    """Adapt along a stream of batches under the configured reset policy.

    Each batch's augmentation stream is keyed by the batch content, so
    under the episodic policy permuting the batch order permutes the
    outputs correspondingly.
    """
    source_params = {k: v.data.copy() for k, v in model.params.items()}
    source_buffers = {k: v.copy() for k, v in model.buffers.items()}
    step_fn = tent_baseline if baseline else adapt_batch

    predictions: list[np.ndarray] = []
    reports: list[AdaptationReport] = []
    for batch in batches:
        batch = np.asarray(batch, dtype=np.float64)
        if cfg.reset_policy == "episodic":
            for k, v in source_params.items():
                model.params[k].data = v.copy()
            model.buffers = {k: v.copy() for k, v in source_buffers.items()}
        model, preds, report = step_fn(model, batch, cfg,
                                       rng.substream(*_batch_key(batch)))
        predictions.append(preds)
        reports.append(report)
    return predictions, reports
