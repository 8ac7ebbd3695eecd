"""The adaptation objective: KL consistency across augmentations plus an
entropy penalty on the clean-input posterior.

All losses are computed in nats and are differentiable engine expressions:
gradients flow through every argument, including through the average
posterior inside the consistency term.  Inputs may be single posteriors
of shape [K] or batches [N, K]; batched calls return the mean over the
batch.

Every log is floored at LOG_EPS inside the log only (the probability
weights are left untouched), so saturated posteriors cannot produce -inf.
"""

from __future__ import annotations

import numpy as np

from .engine import Tensor, clip_min, log, mean, mul, sub, tsum
from .errors import DimensionError

__all__ = [
    "LOG_EPS",
    "kl_divergence",
    "consistency_loss",
    "entropy",
    "total_loss",
]

LOG_EPS = 1e-12


def _as_tensor(p) -> Tensor:
    return p if isinstance(p, Tensor) else Tensor(np.asarray(p, dtype=np.float64))


def _check_same_shape(*ps: Tensor) -> None:
    shapes = {p.data.shape for p in ps}
    if len(shapes) != 1:
        raise DimensionError(f"posterior shapes differ: {sorted(shapes)}")
    if ps[0].data.ndim not in (1, 2):
        raise DimensionError("posteriors must be [K] or [N, K]")


def _batch_mean(per_sample: Tensor) -> Tensor:
    # per_sample is scalar for [K] inputs and [N] for [N, K] inputs
    if per_sample.data.ndim == 0:
        return per_sample
    return mean(per_sample)


def kl_divergence(p, q) -> Tensor:
    """KL(p || q) = sum_k p_k * (log p_k - log q_k), in nats."""
    p, q = _as_tensor(p), _as_tensor(q)
    _check_same_shape(p, q)
    logp = log(clip_min(p, LOG_EPS))
    logq = log(clip_min(q, LOG_EPS))
    per = tsum(mul(p, sub(logp, logq)), axis=-1)
    return _batch_mean(per)


def consistency_loss(p_x, p1, p2) -> Tensor:
    """Mean KL of the three posteriors to their average posterior.

    Returns (KL(p_x||pbar) + KL(p1||pbar) + KL(p2||pbar)) / 3 with
    pbar = (p_x + p1 + p2) / 3; symmetric in its arguments and bounded by
    ln 3.
    """
    p_x, p1, p2 = _as_tensor(p_x), _as_tensor(p1), _as_tensor(p2)
    _check_same_shape(p_x, p1, p2)
    pbar = (p_x + p1 + p2) * (1.0 / 3.0)
    total = kl_divergence(p_x, pbar) + kl_divergence(p1, pbar) + kl_divergence(p2, pbar)
    return total * (1.0 / 3.0)


def entropy(p) -> Tensor:
    """Shannon entropy -sum_k p_k log p_k in nats, with 0*log 0 := 0."""
    p = _as_tensor(p)
    if p.data.ndim not in (1, 2):
        raise DimensionError("posteriors must be [K] or [N, K]")
    per = -tsum(mul(p, log(clip_min(p, LOG_EPS))), axis=-1)
    return _batch_mean(per)


def total_loss(p_x, p1, p2, cons_weight: float = 1.0, ent_weight: float = 1.0) -> Tensor:
    """Consistency term plus entropy of the clean-input posterior.

    The weights default to 1 (plain sum of the two terms); they exist for
    the loss-term ablation and for the entropy-only baseline.
    """
    parts = []
    if cons_weight != 0.0:
        parts.append(consistency_loss(p_x, p1, p2) * cons_weight)
    if ent_weight != 0.0:
        parts.append(entropy(p_x) * ent_weight)
    if not parts:
        return Tensor(np.zeros(()))
    out = parts[0]
    for extra in parts[1:]:
        out = out + extra
    return out
