"""Stability of a point sitting just inside an arm of the 2D cross.

The analytic predictor is a sigmoid of the signed distance to the cross
outline, so the "true" boundary is known and the indices can be read
against it.
"""
import sys
from pathlib import Path

import numpy as np

from muce import AnalyticBoundaryPredictor, CrossGeometry, fit_grid
from muce.datasets import generate_cross_2d
from muce.indices import format_table
from muce.report import build_report, report_indices, write_outputs

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output/cross_stability")

data = generate_cross_2d()
print(f"{len(data)} rows, {sum(data.labels)} inside the cross")

grid = fit_grid(data)  # 5% of each range on either side, about 0.2 here
model = AnalyticBoundaryPredictor(CrossGeometry(), sharpness=10)

# 0.04 above the lower edge of the right arm
x = {"F1": 0.81, "F2": -0.31}
print("signed distance:", CrossGeometry().signed_distance(np.array([[0.81, -0.31]]))[0])

report = build_report(grid, x, model, model_id="cross")
print(format_table(report_indices(report)))

# F2 crosses the edge inside its stability range, F1 slides along it
for block in report["features"]:
    ice = block["ice"]
    print(block["feature"], "restricted ICE:", np.round(ice["predictions"], 3))

files = write_outputs(report, out_dir)
print("wrote", len(files), "files to", out_dir)
