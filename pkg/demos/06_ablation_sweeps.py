"""Hyperparameter ablations through the sweep runner: SGD steps, loss
terms, and batch size, reported as plot-ready CSV.

Takes several minutes on one CPU core; shrink sizes below to go faster.

Run:  python demos/06_ablation_sweeps.py
"""

import time

from ttakit.data import synthetic_dataset
from ttakit.harness import ExperimentConfig, run_sweep, summarize, sweep_csv, train_source_model

t0 = time.time()
train = synthetic_dataset(1200, seed=0)
model, _ = train_source_model(train, "cnn-bn-small", seed=0, epochs=8)
test = synthetic_dataset(128, seed=1_000_003)
print(f"setup in {time.time() - t0:.0f}s")

cfg = ExperimentConfig(
    corruptions=("gaussian_noise:5",),
    seeds=(0, 1, 2),
    adapt_batch_size=64,
    data_max_batches=1,
    modes=("proposed",),
)

for axis, values in (("steps", [0, 1, 5]),
                     ("loss_terms", ["unadapted", "consistency-only",
                                     "consistency+entropy"]),
                     ("batch_size", [2, 16, 64])):
    t0 = time.time()
    results = run_sweep(cfg, axis, values, model=model, test_set=test)
    print(f"--- {axis} sweep ({time.time() - t0:.0f}s)")
    print(sweep_csv(axis, results), end="")

print("note: each sweep point embeds its own config hash in its records")
point = run_sweep(cfg, "steps", [0], model=model, test_set=test)["0"]
print("example record mode/hash:", point[0].mode, point[0].config_hash)
print("summary:", summarize(point)["proposed"])
