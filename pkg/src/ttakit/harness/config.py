"""Experiment configuration: a flat key/value text file with dotted keys.

Example::

    # toy run
    data.source = synthetic
    data.test_size = 512
    model.arch = cnn-bn-small
    model.checkpoint = runs/source.ckpt
    adapt.steps = 5
    adapt.lr = 1e-4
    aug.kind = randaugment
    corruptions = gaussian_noise:5, contrast:4
    seeds = 0, 1, 2
    modes = unadapted, tent, proposed

Unknown keys are rejected.  The canonical serialization of a config is
hashed (sha256, 12 hex digits) and embedded in every metrics row.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..adapt import AdaptationConfig
from ..augment import AugmentationPolicy
from ..errors import ConfigError

__all__ = ["ExperimentConfig", "parse_flat_file", "render_flat", "MODES"]

MODES = ("unadapted", "tent", "proposed", "proposed-randaugment", "proposed-augmix")


def parse_flat_file(path) -> dict[str, str]:
    """Read `key = value` lines; '#' starts a comment; blanks ignored."""
    out: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def render_flat(values: dict[str, object]) -> str:
    lines = []
    for key in sorted(values):
        v = values[key]
        if isinstance(v, (list, tuple)):
            v = ", ".join(str(e) for e in v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


def _as_int(key, v):
    try:
        return int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {v!r}") from None


def _as_float(key, v):
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {v!r}") from None


def _as_list(v) -> list[str]:
    if isinstance(v, (list, tuple)):
        return [str(e) for e in v]
    return [part.strip() for part in str(v).split(",") if part.strip()]


@dataclass(frozen=True)
class ExperimentConfig:
    """Typed view of one experiment; every field maps to one flat key."""

    # dataset
    data_source: str = "synthetic"          # synthetic | a path
    data_format: str = "cifar-binary"       # used when data_source is a path
    data_train_size: int = 2000
    data_test_size: int = 512
    data_seed: int = 0
    data_max_batches: int = 0               # 0 = use the full test set

    # model
    model_arch: str = "cnn-bn-small"
    model_checkpoint: str = "runs/source.ckpt"

    # source training recipe
    train_epochs: int = 12
    train_lr: float = 0.05
    train_momentum: float = 0.9
    train_weight_decay: float = 5e-4
    train_batch_size: int = 64

    # adaptation loop
    adapt_steps: int = 5
    adapt_lr: float = 1e-4
    adapt_momentum: float = 0.9
    adapt_weight_decay: float = 5e-4
    adapt_batch_size: int = 64
    adapt_param_set: str = "all"
    adapt_reset_policy: str = "episodic"
    adapt_bn_mode: str = "train-stats"
    adapt_cons_weight: float = 1.0
    adapt_ent_weight: float = 1.0

    # augmentation policy
    aug_kind: str = "randaugment"
    aug_m: int = 1
    aug_n: int = 1
    aug_k: int = 1
    aug_alpha: float = 1.0
    aug_depth: int = 3
    aug_severity: int = 2

    # run matrix
    corruptions: tuple[str, ...] = ("gaussian_noise:5",)
    seeds: tuple[int, ...] = (0,)
    modes: tuple[str, ...] = ("unadapted", "proposed")

    # sweep
    sweep_axis: str = ""
    sweep_values: tuple[str, ...] = ()

    # outputs
    out_dir: str = "runs"

    def __post_init__(self):
        for mode in self.modes:
            if mode not in MODES:
                raise ConfigError(f"unknown mode {mode!r}; known: {MODES}")

    _KEYS = None  # filled below

    @classmethod
    def key_map(cls) -> dict[str, str]:
        """flat config key -> dataclass field name."""
        if cls._KEYS is None:
            m: dict[str, str] = {}
            for f in fields(cls):
                if f.name in ("corruptions", "seeds", "modes"):
                    m[f.name] = f.name
                else:
                    m[f.name.replace("_", ".", 1)] = f.name
            cls._KEYS = m
        return cls._KEYS

    @classmethod
    def from_flat(cls, flat: dict[str, object]) -> "ExperimentConfig":
        km = cls.key_map()
        kwargs: dict[str, object] = {}
        defaults = cls()
        for key, raw in flat.items():
            if key not in km:
                raise ConfigError(f"unknown config key {key!r}")
            name = km[key]
            current = getattr(defaults, name)
            if name == "seeds":
                kwargs[name] = tuple(_as_int(key, s) for s in _as_list(raw))
            elif name in ("corruptions", "modes", "sweep_values"):
                kwargs[name] = tuple(_as_list(raw))
            elif isinstance(current, bool):
                kwargs[name] = str(raw).lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                kwargs[name] = _as_int(key, raw)
            elif isinstance(current, float):
                kwargs[name] = _as_float(key, raw)
            else:
                kwargs[name] = str(raw)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_flat(parse_flat_file(path))

    def to_flat(self) -> dict[str, object]:
        km = self.key_map()
        out: dict[str, object] = {}
        for key, name in km.items():
            v = getattr(self, name)
            if isinstance(v, tuple):
                v = list(v)
            out[key] = v
        return out

    def config_hash(self) -> str:
        canonical = render_flat(self.to_flat())
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def policy(self, kind: str | None = None) -> AugmentationPolicy:
        return AugmentationPolicy(
            kind=kind or self.aug_kind, m=self.aug_m, n=self.aug_n,
            k=self.aug_k, alpha=self.aug_alpha, depth=self.aug_depth,
            severity=self.aug_severity)

    def adaptation(self, kind: str | None = None) -> AdaptationConfig:
        return AdaptationConfig(
            steps=self.adapt_steps, lr=self.adapt_lr,
            momentum=self.adapt_momentum, weight_decay=self.adapt_weight_decay,
            batch_size=self.adapt_batch_size, param_set=self.adapt_param_set,
            reset_policy=self.adapt_reset_policy, bn_mode=self.adapt_bn_mode,
            cons_weight=self.adapt_cons_weight, ent_weight=self.adapt_ent_weight,
            policy=self.policy(kind))

    def with_updates(self, **updates) -> "ExperimentConfig":
        return replace(self, **updates)
