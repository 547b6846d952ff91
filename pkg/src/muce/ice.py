"""Single-observation ICE curves over the fitted grid or the stability range."""

from __future__ import annotations

import csv
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import Observation, Value, format_value, validate_observation
from .grid import ExplanationGrid, StabilityInterval, round_half_up, stability_interval
from .predictors import Predictor, predict_proba

DEFAULT_N_LOCAL = 11


@dataclass(frozen=True)
class IceCurve:
    feature: str
    values: tuple
    predictions: tuple[float, ...]
    observation_value: Value
    observation_prediction: float
    restricted: bool = False

    @property
    def points(self) -> list[tuple[Value, float]]:
        return list(zip(self.values, self.predictions))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["value", "prediction"])
            for v, p in self.points:
                writer.writerow([format_value(v), repr(p)])


def _evaluate(obs: Observation, feature: str, values, model: Predictor, restricted: bool) -> IceCurve:
    x = obs[feature]
    batch = [obs.replace(feature, v) for v in values]
    preds = [float(p) for p in predict_proba(model, batch)]
    return IceCurve(feature, tuple(values), tuple(preds), x, preds[values.index(x)], restricted)


def compute_ice(grid: ExplanationGrid, obs: Mapping, feature: str, model: Predictor) -> IceCurve:
    """ICE over the full fitted grid, with the observation's own value injected."""
    obs = validate_observation(obs, grid.schema)
    fg = grid.feature(feature)
    x = obs[feature]
    values = list(fg.values)
    if x not in values:
        values.append(x)
        if fg.kind.is_numeric:
            values.sort()
    return _evaluate(obs, feature, values, model, restricted=False)


def local_values(interval: StabilityInterval, n_local: int = DEFAULT_N_LOCAL) -> list:
    """Evaluation points inside a stability interval.

    Always contains both endpoints and the observation's value.
    """
    if n_local < 3:
        raise ValueError("n_local must be at least 3")
    x = interval.center
    if interval.labels is not None:
        return list(interval.labels)
    lo, hi = interval.lower, interval.upper
    if lo == hi:
        return [x]
    grid = np.linspace(lo, hi, n_local)
    if interval.kind.is_integral:
        values = {round_half_up(v) for v in grid} | {lo, hi, x}
        return sorted(values)
    values = [float(v) for v in grid]
    values[0], values[-1] = lo, hi
    spacing = (hi - lo) / (n_local - 1)
    # snap linspace points that are the observation up to rounding
    values = [x if abs(v - x) <= 1e-9 * spacing else v for v in values]
    return sorted(set(values) | {x})


def compute_ice_local(
    grid: ExplanationGrid,
    obs: Mapping,
    feature: str,
    model: Predictor,
    n_local: int = DEFAULT_N_LOCAL,
    interval: StabilityInterval | None = None,
) -> IceCurve:
    """ICE restricted to the feature's stability interval around ``obs``."""
    obs = validate_observation(obs, grid.schema)
    if interval is None:
        interval = stability_interval(grid, obs, feature)
    return _evaluate(obs, feature, local_values(interval, n_local), model, restricted=True)
