# %% [markdown]
# # A full sweep on synthetic records
#
# Same shape as the heart-failure table: 299 rows, 12 numeric columns, a
# 70/30 split. For each group count the constraint parameters are annealed
# on the training loss, then scored on validation. The winner has to beat
# plain logistic regression on the same split.

# %%
import tempfile
from pathlib import Path

import numpy as np

from stochastic_lr import AnnealSchedule, Dataset, SplitSpec, split, sweep

rng = np.random.default_rng(7)
n, d = 299, 12
X = rng.normal(size=(n, d)) * rng.uniform(0.5, 3, d) + rng.normal(size=d) * 5
w = rng.normal(size=d) * (rng.random(d) < 0.5)
lin = ((X - X.mean(0)) / X.std(0)) @ w - 0.8
y = (rng.random(n) < 1 / (1 + np.exp(-lin))).astype(int)
data = Dataset(X, y, tuple(f"col{i}" for i in range(d)), "event")
train, valid = split(data, SplitSpec(0.7, seed=0))
print("train rows", train.n_rows, "validation rows", valid.n_rows)

# %%
model, curve = sweep(train, valid, "kmeans", AnnealSchedule(max_evals=60), max_groups=12)
print(f"baseline accuracy {curve.baseline.accuracy:.3f}")
for e in curve.entries:
    if e.skipped:
        print(f"k={e.k:>2} skipped ({e.reason})")
    else:
        print(f"k={e.k:>2} alpha={e.alpha:6.3f} beta={e.beta:.3f} acc={e.accuracy:.3f} "
              f"f1={e.f1 if e.f1 is None else round(e.f1, 3)}")

# %%
if model.baseline_won:
    print("no group count beat the baseline; keeping it")
else:
    print(f"winner k={model.group_count} {model.config} accuracy {model.selection_metric:.3f}")

# %% [markdown]
# The curve is the data behind an accuracy-per-k plot; write it out and plot
# with any tool, e.g. ``pandas.read_csv(path).plot(x="k", y="accuracy")``.

# %%
out = Path(tempfile.mkdtemp()) / "sweep.csv"
curve.to_csv(out)
print(out.read_text().splitlines()[0])
