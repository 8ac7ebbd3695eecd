"""Command-line surface.

Verbs: train-source, corrupt, adapt, sweep, report.  Each accepts
--config <file>, --seed and --out.  Exit codes: 0 success, 2 config
error, 3 data error, 4 numeric abort.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corruptions import CorruptionSpec, build_corrupted_set
from .data import save_cifar_binary, synthetic_dataset
from .errors import ConfigError, DataError, NumericError
from .harness import (
    ExperimentConfig,
    read_records,
    render_summary,
    run_experiment,
    run_sweep,
    summarize,
    summary_csv,
    sweep_csv,
    train_source_model,
    write_records,
)
from .harness.experiment import load_test_dataset

__all__ = ["main"]


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_updates(seeds=(args.seed,))
    if args.out is not None:
        cfg = cfg.with_updates(out_dir=args.out)
    return cfg


def _train_dataset(cfg: ExperimentConfig):
    if cfg.data_source == "synthetic":
        return synthetic_dataset(cfg.data_train_size, seed=cfg.data_seed)
    from .data import load_dataset
    return load_dataset(cfg.data_source, cfg.data_format)


def cmd_train_source(args) -> int:
    cfg = _load_config(args)
    dataset = _train_dataset(cfg)
    seed = cfg.seeds[0]
    out_dir = Path(cfg.out_dir)
    model, history = train_source_model(
        dataset, cfg.model_arch, seed=seed, epochs=cfg.train_epochs,
        lr=cfg.train_lr, momentum=cfg.train_momentum,
        weight_decay=cfg.train_weight_decay, batch_size=cfg.train_batch_size,
        out_dir=out_dir)
    print(f"trained {cfg.model_arch} (seed {seed}): "
          f"train accuracy {history['final_train_accuracy']:.4f}")
    print(f"checkpoint: {out_dir / 'source.ckpt'}")
    return 0


def cmd_corrupt(args) -> int:
    cfg = _load_config(args)
    dataset = load_test_dataset(cfg)
    specs = [CorruptionSpec.parse(s) for s in cfg.corruptions]
    seed = cfg.seeds[0]
    sets, manifest = build_corrupted_set(dataset, specs, seed=seed)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for key, ds in sets.items():
        save_cifar_binary(ds, out_dir / f"{key.replace(':', '_s')}.bin")
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2),
                                           encoding="utf-8")
    print(f"wrote {len(sets)} corrupted set(s) to {out_dir}")
    return 0


def cmd_adapt(args) -> int:
    cfg = _load_config(args)
    records, summary = run_experiment(cfg)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_records(records, out_dir / "metrics.jsonl")
    (out_dir / "summary.txt").write_text(summary, encoding="utf-8")
    (out_dir / "summary.csv").write_text(summary_csv(summarize(records)),
                                         encoding="utf-8")
    print(summary, end="")
    print(f"metrics: {out_dir / 'metrics.jsonl'}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    axis = args.axis or cfg.sweep_axis
    values = args.values.split(",") if args.values else list(cfg.sweep_values)
    if not axis or not values:
        raise ConfigError("sweep needs an axis and values "
                          "(sweep.axis/sweep.values or --axis/--values)")
    results = run_sweep(cfg, axis, values)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for value, records in results.items():
        write_records(records, out_dir / f"metrics_{axis}_{value}.jsonl")
    csv_text = sweep_csv(axis, results)
    (out_dir / f"sweep_{axis}.csv").write_text(csv_text, encoding="utf-8")
    print(csv_text, end="")
    return 0


def cmd_report(args) -> int:
    cfg = _load_config(args)
    metrics_path = Path(args.metrics) if args.metrics else Path(cfg.out_dir) / "metrics.jsonl"
    if not metrics_path.exists():
        raise DataError(f"metrics file {metrics_path} does not exist")
    records = read_records(metrics_path)
    summary = summarize(records)
    print(render_summary(summary), end="")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.csv").write_text(summary_csv(summary), encoding="utf-8")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttakit",
        description="Test-time adaptation experiments on corrupted image sets")
    sub = parser.add_subparsers(dest="verb", required=True)
    verbs = {
        "train-source": cmd_train_source,
        "corrupt": cmd_corrupt,
        "adapt": cmd_adapt,
        "sweep": cmd_sweep,
        "report": cmd_report,
    }
    for name, fn in verbs.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key/value config file")
        p.add_argument("--seed", type=int, help="override the config seed list")
        p.add_argument("--out", help="override the output directory")
        if name == "sweep":
            p.add_argument("--axis", help="steps | lr | batch_size | loss_terms | aug_params")
            p.add_argument("--values", help="comma-separated axis values")
        if name == "report":
            p.add_argument("--metrics", help="metrics.jsonl to summarize")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except NumericError as e:
        print(f"numeric abort: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
