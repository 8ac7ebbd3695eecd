"""Metrics rows, line-delimited persistence, and summary aggregation.

One record per (batch, corruption, seed, mode).  Records serialize as one
JSON object per line with a stable field order.  Wall-clock time is
carried for reporting but excluded from reproducibility comparisons,
since it can never be bit-stable across runs.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "MetricsRecord",
    "write_records",
    "read_records",
    "strip_timing",
    "summarize",
    "render_summary",
    "summary_csv",
]

_FIELD_ORDER = (
    "config_hash", "seed", "corruption", "severity", "batch_index", "mode",
    "pre_accuracy", "post_accuracy", "step_losses", "wall_ms",
)


@dataclass(frozen=True)
class MetricsRecord:
    config_hash: str
    seed: int
    corruption: str
    severity: int
    batch_index: int
    mode: str
    pre_accuracy: float
    post_accuracy: float
    step_losses: tuple[float, ...]
    wall_ms: float

    def __post_init__(self):
        if not (0.0 <= self.pre_accuracy <= 1.0 and 0.0 <= self.post_accuracy <= 1.0):
            raise ValueError("accuracies must lie in [0, 1]")

    def to_json(self) -> str:
        d = asdict(self)
        d["step_losses"] = list(self.step_losses)
        return json.dumps({k: d[k] for k in _FIELD_ORDER})


def write_records(records, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def read_records(path) -> list[MetricsRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        d["step_losses"] = tuple(d["step_losses"])
        records.append(MetricsRecord(**d))
    return records


def strip_timing(record: MetricsRecord) -> tuple:
    """Everything that must reproduce bit-exactly across reruns."""
    return (record.config_hash, record.seed, record.corruption, record.severity,
            record.batch_index, record.mode, record.pre_accuracy,
            record.post_accuracy, record.step_losses)


def summarize(records) -> dict[str, dict[str, float]]:
    """mode -> {corruption:severity -> mean accuracy, "mean" -> overall mean}.

    A pure function of the row set: per-corruption accuracy is the mean of
    that corruption's row accuracies; the overall mean is the arithmetic
    mean of the per-corruption values.
    """
    buckets: dict[str, dict[str, list[float]]] = {}
    for rec in records:
        key = f"{rec.corruption}:{rec.severity}"
        buckets.setdefault(rec.mode, {}).setdefault(key, []).append(rec.post_accuracy)
    out: dict[str, dict[str, float]] = {}
    for mode, per_corr in buckets.items():
        vals = {key: float(np.mean(accs)) for key, accs in sorted(per_corr.items())}
        vals["mean"] = float(np.mean(list(vals.values())))
        out[mode] = vals
    return out


def render_summary(summary: dict[str, dict[str, float]]) -> str:
    """Plain-text aligned table: corruptions as rows, modes as columns."""
    modes = sorted(summary)
    corruptions = sorted({k for per in summary.values() for k in per if k != "mean"})
    rows = corruptions + ["mean"]
    name_w = max([len(r) for r in rows] + [len("corruption")])
    col_w = max([len(m) for m in modes] + [8])

    lines = ["corruption".ljust(name_w) + "  " +
             "  ".join(m.rjust(col_w) for m in modes)]
    for row in rows:
        cells = []
        for m in modes:
            v = summary[m].get(row)
            cells.append(("-" if v is None else f"{100 * v:.2f}").rjust(col_w))
        lines.append(row.ljust(name_w) + "  " + "  ".join(cells))
    return "\n".join(lines) + "\n"


def summary_csv(summary: dict[str, dict[str, float]]) -> str:
    """Plot-friendly CSV: corruption,mode,accuracy."""
    lines = ["corruption,mode,accuracy"]
    for mode in sorted(summary):
        for key, v in sorted(summary[mode].items()):
            lines.append(f"{key},{mode},{v:.6f}")
    return "\n".join(lines) + "\n"
