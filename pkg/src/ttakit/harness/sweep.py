"""Ablation sweeps: rerun one experiment along a hyperparameter axis.

Supported axes: ``steps``, ``lr``, ``batch_size``, ``loss_terms``,
``aug_params``.  Every point shares the configured seeds; each point's
records carry that point's own config hash for provenance.
"""

from __future__ import annotations

from ..errors import ConfigError
from ..models import Model
from ..data import Dataset
from .config import ExperimentConfig
from .experiment import run_experiment
from .metrics import MetricsRecord, summarize

__all__ = ["run_sweep", "LOSS_TERM_PRESETS", "sweep_csv"]

# loss-term ablation presets: (consistency weight, entropy weight, modes)
LOSS_TERM_PRESETS = {
    "unadapted": None,
    "entropy-only": (0.0, 1.0),
    "consistency-only": (1.0, 0.0),
    "consistency+entropy": (1.0, 1.0),
}

AXES = ("steps", "lr", "batch_size", "loss_terms", "aug_params")


def _point_config(cfg: ExperimentConfig, axis: str, value: str) -> ExperimentConfig:
    if axis == "steps":
        return cfg.with_updates(adapt_steps=int(value))
    if axis == "lr":
        return cfg.with_updates(adapt_lr=float(value))
    if axis == "batch_size":
        return cfg.with_updates(adapt_batch_size=int(value))
    if axis == "loss_terms":
        if value not in LOSS_TERM_PRESETS:
            raise ConfigError(
                f"loss_terms value {value!r}; known: {sorted(LOSS_TERM_PRESETS)}")
        preset = LOSS_TERM_PRESETS[value]
        if preset is None:
            return cfg.with_updates(modes=("unadapted",))
        cons, ent = preset
        return cfg.with_updates(modes=("proposed",),
                                adapt_cons_weight=cons, adapt_ent_weight=ent)
    if axis == "aug_params":
        # value like "m=2 n=3" or "k=3 alpha=0.5"
        updates: dict[str, object] = {}
        for part in value.replace(",", " ").split():
            key, _, raw = part.partition("=")
            field = f"aug_{key.strip()}"
            if field not in ("aug_m", "aug_n", "aug_k", "aug_alpha",
                             "aug_depth", "aug_severity"):
                raise ConfigError(f"unknown augmentation parameter {key!r}")
            updates[field] = float(raw) if field == "aug_alpha" else int(raw)
        return cfg.with_updates(**updates)
    raise ConfigError(f"unknown sweep axis {axis!r}; known: {AXES}")


def run_sweep(cfg: ExperimentConfig, axis: str, values, model: Model | None = None,
              test_set: Dataset | None = None
              ) -> dict[str, list[MetricsRecord]]:
    """One run_experiment per axis value; returns records keyed by value."""
    if axis not in AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; known: {AXES}")
    out: dict[str, list[MetricsRecord]] = {}
    for value in values:
        point = _point_config(cfg, axis, str(value))
        records, _ = run_experiment(point, model=model, test_set=test_set)
        out[str(value)] = records
    return out


def sweep_csv(axis: str, results: dict[str, list[MetricsRecord]]) -> str:
    """Plot data: axis value x mode -> mean accuracy over corruptions."""
    lines = [f"{axis},mode,mean_accuracy"]
    for value, records in results.items():
        summary = summarize(records)
        for mode in sorted(summary):
            lines.append(f"{value},{mode},{summary[mode]['mean']:.6f}")
    return "\n".join(lines) + "\n"
