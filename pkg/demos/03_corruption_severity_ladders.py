"""All corruption kinds across the five severity levels.

Writes corruption_sheet.png and prints the average distortion ladder
per kind.

Run:  python demos/03_corruption_severity_ladders.py
"""

from pathlib import Path

import numpy as np
from PIL import Image

from ttakit.corruptions import CORRUPTION_KINDS, CorruptionSpec, corrupt
from ttakit.data import render_sample
from ttakit.rng import SeededRng

HERE = Path(__file__).parent

base = render_sample(label=0, rng=SeededRng(3))

rows = []
print(f"{'kind':<16} {'severity 1..5 distortion ||x_c - x||':<40}")
for kind in CORRUPTION_KINDS:
    row = [base]
    dists = []
    for severity in range(1, 6):
        c = corrupt(base, CorruptionSpec(kind, severity), SeededRng(11))
        row.append(c)
        dists.append(np.linalg.norm(c - base))
    rows.append(row)
    print(f"{kind:<16} " + "  ".join(f"{d:6.2f}" for d in dists))

h, w = base.shape[1:]
canvas = np.ones((3, len(rows) * (h + 2), 6 * (w + 2)))
for r, row in enumerate(rows):
    for c, img in enumerate(row):
        canvas[:, r * (h + 2) + 1:r * (h + 2) + 1 + h,
               c * (w + 2) + 1:c * (w + 2) + 1 + w] = img
Image.fromarray((canvas.transpose(1, 2, 0) * 255).astype("uint8")).resize(
    (6 * 34 * 3, len(rows) * 34 * 3), Image.NEAREST).save(HERE / "corruption_sheet.png")
print("wrote", HERE / "corruption_sheet.png")
