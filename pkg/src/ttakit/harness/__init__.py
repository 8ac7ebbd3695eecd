from .config import ExperimentConfig, parse_flat_file, render_flat
from .experiment import REFERENCE_RESULTS, load_test_dataset, run_experiment
from .metrics import (
    MetricsRecord,
    read_records,
    render_summary,
    strip_timing,
    summarize,
    summary_csv,
    write_records,
)
from .sweep import LOSS_TERM_PRESETS, run_sweep, sweep_csv
from .train import evaluate, train_source_model

__all__ = [
    "ExperimentConfig", "parse_flat_file", "render_flat",
    "run_experiment", "load_test_dataset", "REFERENCE_RESULTS",
    "MetricsRecord", "write_records", "read_records", "strip_timing",
    "summarize", "render_summary", "summary_csv",
    "run_sweep", "sweep_csv", "LOSS_TERM_PRESETS",
    "train_source_model", "evaluate",
]
