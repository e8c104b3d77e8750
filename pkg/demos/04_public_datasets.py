# %% [markdown]
# # The two public datasets
#
# Place the heart-failure clinical records CSV and the rice (Cammeo /
# Osmancik) CSV in ``$SLR_DATA_DIR`` (default ``data/``). The rice table is
# distributed as ARFF/XLSX and needs a one-off CSV export with its
# ``Class`` column kept. Nothing is downloaded here.

# %%
import os
from pathlib import Path

from stochastic_lr.cli import RunConfig, run_once

root = Path(os.environ.get("SLR_DATA_DIR", "data"))
found = {p.name.lower(): p for p in root.glob("*.csv")} if root.is_dir() else {}
heart = next((p for n, p in found.items() if "heart" in n), None)
rice = next((p for n, p in found.items() if "rice" in n or "cammeo" in n), None)
print("heart:", heart, " rice:", rice)

# %%
runs = []
if heart:
    runs.append(RunConfig(data=str(heart), layout="heart", method="kmeans"))
if rice:
    runs.append(RunConfig(data=str(rice), layout="rice", method="quantile"))
for config in runs:
    res = run_once(config, seed=0)
    print(config.layout, "baseline", round(res["baseline"].accuracy, 3),
          "winner", round(res["winner"].accuracy, 3), "k", res["model"].group_count)
if not runs:
    print("no CSVs found; see the note above")
