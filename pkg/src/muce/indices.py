"""Stability and uncertainty indices, and the per-observation summary."""

from __future__ import annotations

import csv
import json
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .features import MuceError, Value, format_value, validate_observation
from .grid import ExplanationGrid, stability_intervals
from .ice import DEFAULT_N_LOCAL, IceCurve
from .predictors import Predictor
from .search import MuceConfig, MuceResult, compute_muce

INDEX_COLUMNS = ["feature", "value", "stability", "uncertainty", "uncertainty_minus", "uncertainty_plus"]


class EmptyCurve(MuceError):
    pass


class MismatchedCurves(MuceError):
    pass


@dataclass(frozen=True)
class ConfidenceIndices:
    feature: str
    value: Value
    stability: float
    uncertainty: float
    uncertainty_plus: float
    uncertainty_minus: float
    negative_gaps: tuple[int, ...] = field(default=())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["negative_gaps"] = list(self.negative_gaps)
        return d


def compute_stability(ice: IceCurve) -> float:
    """1 - (max - min) of the restricted ICE predictions."""
    if not ice.predictions:
        raise EmptyCurve(f"ICE curve for {ice.feature!r} has no points")
    if not ice.restricted:
        raise ValueError("stability is defined on the ICE curve restricted to the stability range")
    return 1.0 - (max(ice.predictions) - min(ice.predictions))


def gaps(result: MuceResult) -> dict[int, float]:
    """Per-index difference between the max and min curves."""
    if set(result.max_curve.points) != set(result.min_curve.points):
        raise MismatchedCurves(f"max and min curves for {result.feature!r} have different indices")
    return {i: result.max_curve.points[i][1] - result.min_curve.points[i][1] for i in result.max_curve.indices}


def compute_uncertainty_indices(result: MuceResult) -> tuple[float, float, float]:
    """``(uncertainty, uncertainty_plus, uncertainty_minus)``.

    Ordered features: the gap summed over -N/2..N/2 divided by N, and over
    0..N/2 (plus) or -N/2..0 (minus) divided by N/2. Index 0 counts in both
    halves, so ``N*u == (N/2)*(u_plus + u_minus) - gap_0``. Unordered
    features: all three are the mean gap over the evaluated values.
    """
    d = gaps(result)
    if not result.ordered:
        u = sum(d.values()) / len(d)
        return u, u, u
    n = result.n_iterations
    u = sum(d.values()) / n
    plus = sum(g for i, g in d.items() if i >= 0) / (n / 2)
    minus = sum(g for i, g in d.items() if i <= 0) / (n / 2)
    return u, plus, minus


def indices_for(result: MuceResult) -> ConfidenceIndices:
    u, plus, minus = compute_uncertainty_indices(result)
    negative = tuple(i for i, g in gaps(result).items() if g < 0)
    return ConfidenceIndices(
        result.feature,
        result.ice_restricted.observation_value,
        compute_stability(result.ice_restricted),
        u,
        plus,
        minus,
        negative,
    )


def summarize_observation(
    grid: ExplanationGrid,
    obs: Mapping,
    model: Predictor,
    config: MuceConfig = MuceConfig(),
    n_local: int = DEFAULT_N_LOCAL,
    jobs: int = 1,
) -> tuple[list[ConfidenceIndices], dict[str, MuceResult]]:
    """Indices and MUCE results for every feature, in schema order.

    With ``jobs > 1`` and a ``concurrent_safe`` model, features are explained
    in a thread pool; results do not depend on scheduling.
    """
    obs = validate_observation(obs, grid.schema)
    intervals = stability_intervals(grid, obs)

    def run(name):
        return compute_muce(grid, obs, name, model, config, n_local, intervals)

    names = grid.feature_names
    if jobs > 1 and getattr(model, "concurrent_safe", False):
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, names))
    else:
        results = [run(n) for n in names]
    return [indices_for(r) for r in results], dict(zip(names, results))


def format_table(rows: Sequence[ConfidenceIndices]) -> str:
    """Human-readable index table, two decimals."""
    header = INDEX_COLUMNS
    body = [
        [r.feature, format_value(r.value)]
        + [f"{getattr(r, c):.2f}" for c in header[2:]]
        for r in rows
    ]
    widths = [max(len(str(x)) for x in col) for col in zip(header, *body)]
    lines = ["  ".join(str(x).ljust(w) for x, w in zip(line, widths)).rstrip() for line in [header, *body]]
    return "\n".join(lines)


def write_indices_csv(rows: Sequence[ConfidenceIndices], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(INDEX_COLUMNS)
        for r in rows:
            writer.writerow([r.feature, format_value(r.value)] + [repr(getattr(r, c)) for c in INDEX_COLUMNS[2:]])


def write_indices_json(rows: Sequence[ConfidenceIndices], path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump([r.to_dict() for r in rows], fh, indent=1)
        fh.write("\n")
