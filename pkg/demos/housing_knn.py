"""k-NN explanations on the transformed California housing data.

Needs the standard 20,640-row CSV (sklearn column names), passed as the
first argument or via MUCE_HOUSING_CSV. The data is not bundled.
"""
import os
import sys
from pathlib import Path

from muce import MuceConfig, fit_grid, fit_knn_predictor
from muce.datasets import load_raw_housing, transform_housing
from muce.indices import format_table
from muce.report import build_report, report_indices, write_outputs

path = sys.argv[1] if len(sys.argv) > 1 else os.environ.get("MUCE_HOUSING_CSV")
if not path:
    sys.exit("usage: housing_knn.py <california_housing.csv> [out_dir]")
out_dir = Path(sys.argv[2] if len(sys.argv) > 2 else "demo_output/housing_knn")

data = transform_housing(load_raw_housing(path))
print(len(data), "rows after outlier filtering")
for s in data.schema:
    print(f"  {s.name:15s} {s.kind.value}")

# the ordinal and categorical features are explored over their full range
grid = fit_grid(data, delta_overrides={"medinc_ord": 4.0}, category_counts={"cardinal_point": 4})
model = fit_knn_predictor(data, k=15)

x = data.rows[0]
print("observation:", dict(x))
report = build_report(grid, x, model, MuceConfig(), jobs=4, model_id="knn:k=15")
print(format_table(report_indices(report)))
write_outputs(report, out_dir)
print("plots in", out_dir)
