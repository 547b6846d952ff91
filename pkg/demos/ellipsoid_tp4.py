"""Which axis of a near-boundary point is fragile?

The point (0.37, -0.97, 0.02) lies just inside the ellipsoid
(x/3)^2 + y^2 + z^2 = 1; only the second coordinate is close to the surface.
"""
import sys
from pathlib import Path

import numpy as np

from muce import AnalyticBoundaryPredictor, EllipsoidGeometry, fit_grid
from muce.datasets import generate_ellipsoid_3d
from muce.indices import format_table
from muce.report import build_report, report_indices, write_outputs

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output/ellipsoid_tp4")

geom = EllipsoidGeometry()
point = np.array([[0.37, -0.97, 0.02]])
print("quadratic form:", round(float(geom.quadratic_form(point)[0]), 4))

grid = fit_grid(generate_ellipsoid_3d())
model = AnalyticBoundaryPredictor(geom, positive="outside")
x = dict(zip(["F1", "F2", "F3"], point[0].tolist()))

report = build_report(grid, x, model, model_id="ellipsoid")
rows = report_indices(report)
print(format_table(rows))
least = min(rows, key=lambda r: r.stability)
print("least stable:", least.feature)

write_outputs(report, out_dir)
