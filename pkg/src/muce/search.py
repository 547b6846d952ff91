"""MUCE: greedy max/min exploration around one observation.

For a feature of interest the search steps that feature through its
stability range one epsilon at a time and, at every step, hill-climbs over
the remaining features to find the highest (``max``) and lowest (``min``)
reachable prediction. All moves stay inside every feature's stability
interval.

Ordered features move on a fixed lattice ``center + m * epsilon`` (clamped
to the interval), so every visited value is reproducible from the original
observation and an integer offset.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import FeatureKind, Observation, Value, format_value, validate_observation
from .grid import ExplanationGrid, StabilityInterval, round_half_up, stability_intervals
from .ice import DEFAULT_N_LOCAL, IceCurve, compute_ice_local
from .predictors import Predictor, predict_proba

MAX, MIN = "max", "min"


@dataclass(frozen=True)
class MuceConfig:
    """Search settings.

    ``nsteps[0]`` is the number of hill-climbing repetitions at the
    unshifted observation (t1); ``nsteps[n]`` applies after the n-th shift.
    ``epsilon`` optionally overrides the per-feature step.
    """

    n_iterations: int = 10
    nsteps: tuple[int, ...] = (5, 1, 1, 1, 1, 1)
    epsilon: Mapping[str, float] | None = None
    restarts: int = 0
    seed: int = 0
    clamp: bool = True

    def __post_init__(self):
        object.__setattr__(self, "nsteps", tuple(int(t) for t in self.nsteps))
        if self.n_iterations <= 0 or self.n_iterations % 2:
            raise ValueError("n_iterations must be a positive even integer")
        if len(self.nsteps) < self.half + 1:
            raise ValueError(f"nsteps needs at least {self.half + 1} entries")
        if any(t < 0 for t in self.nsteps):
            raise ValueError("nsteps entries must be non-negative")
        if self.epsilon and any(not e > 0 for e in self.epsilon.values()):
            raise ValueError("epsilon values must be positive")
        if self.restarts < 0:
            raise ValueError("restarts must be non-negative")
        if not self.clamp:
            raise ValueError("unclamped exploration is not supported")

    @classmethod
    def from_counts(cls, n_iterations: int = 10, t1: int = 5, ti: int = 1, **kw) -> MuceConfig:
        return cls(n_iterations, (t1,) + (ti,) * (n_iterations // 2), **kw)

    @property
    def half(self) -> int:
        return self.n_iterations // 2

    def to_dict(self) -> dict:
        return {
            "n_iterations": self.n_iterations,
            "nsteps": list(self.nsteps),
            "epsilon": dict(self.epsilon) if self.epsilon else None,
            "restarts": self.restarts,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class MuceCurve:
    points: dict[int, tuple[Observation, float]]

    @property
    def indices(self) -> list[int]:
        return sorted(self.points)

    @property
    def predictions(self) -> list[float]:
        return [self.points[i][1] for i in self.indices]

    @property
    def observations(self) -> list[Observation]:
        return [self.points[i][0] for i in self.indices]

    def values(self, feature: str) -> list[Value]:
        return [self.points[i][0][feature] for i in self.indices]

    def extremum(self, method: str) -> tuple[Observation, float]:
        """First point (in index order) attaining the max/min prediction."""
        preds = self.predictions
        k = int(np.argmax(preds) if method == MAX else np.argmin(preds))
        return self.points[self.indices[k]]


@dataclass(frozen=True)
class MuceResult:
    feature: str
    kind: FeatureKind
    max_curve: MuceCurve
    min_curve: MuceCurve
    ice_restricted: IceCurve
    extremal_max: tuple[Observation, float]
    extremal_min: tuple[Observation, float]
    n_iterations: int

    @property
    def ordered(self) -> bool:
        return self.kind.is_ordered

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["index", "value", "max_prediction", "min_prediction"])
            for i in self.max_curve.indices:
                v = self.max_curve.points[i][0][self.feature]
                writer.writerow([i, format_value(v), repr(self.max_curve.points[i][1]), repr(self.min_curve.points[i][1])])


@dataclass(frozen=True)
class FeatureVariation:
    """Per-feature change turning the original observation into an extremal one.

    Numeric features carry an additive delta, categorical features the
    replacement label.
    """

    feature: str
    which: str
    deltas: dict[str, Value] = field(default_factory=dict)

    def apply(self, x: Mapping) -> Observation:
        out = {}
        for name, v in x.items():
            d = self.deltas[name]
            out[name] = d if isinstance(v, str) else v + d
        return Observation(out)


def resolve_epsilon(grid: ExplanationGrid, config: MuceConfig) -> dict[str, float]:
    """Per-feature step sizes for ordered features.

    Defaults to ``delta / (N/2)`` so the last iteration lands on the interval
    edge; integer kinds are rounded with a floor of 1.
    """
    overrides = dict(config.epsilon or {})
    eps = {}
    for spec in grid.schema:
        if not spec.kind.is_ordered:
            continue
        fg = grid.feature(spec.name)
        e = overrides.get(spec.name, fg.delta / config.half)
        if spec.kind.is_integral:
            e = max(1, round_half_up(e))
        elif e <= 0:
            e = 1.0  # zero-width interval: every move clamps back onto the observation
        eps[spec.name] = e
    return eps


def lattice_value(interval: StabilityInterval, eps, m: int):
    """Value at integer offset ``m`` on the feature's clamped lattice."""
    return interval.clamp(interval.center + m * eps)


def _step(value, interval: StabilityInterval, eps, sign: int):
    m = (value - interval.center) / eps
    mr = round(m)
    if abs(m - mr) <= 1e-9:
        target = mr + sign
    else:  # clamped endpoint between lattice points
        target = math.ceil(m) if sign > 0 else math.floor(m)
    return lattice_value(interval, eps, int(target))


def generate_candidates(
    x: Observation,
    C: Sequence[str],
    epsilon: Mapping[str, float],
    intervals: Mapping[str, StabilityInterval],
) -> list[Observation]:
    """Single-feature neighbours of ``x`` over the features in ``C``.

    Ordered features give a ``+eps`` and a ``-eps`` neighbour (clamped to the
    interval), binary features a flip and categorical features one neighbour
    per other allowed label. Neighbours equal to ``x`` are dropped. Order is
    ``C`` order, ``+`` before ``-``.
    """
    out = []
    for name in C:
        iv = intervals[name]
        v = x[name]
        if iv.kind.is_ordered:
            for sign in (1, -1):
                nv = _step(v, iv, epsilon[name], sign)
                if nv != v:
                    out.append(x.replace(name, nv))
        elif iv.kind is FeatureKind.BINARY:
            out.append(x.replace(name, 1 - v))
        else:
            out.extend(x.replace(name, label) for label in iv.labels if label != v)
    return out


def candidate_count(C: Sequence[str], intervals: Mapping[str, StabilityInterval]) -> int:
    """Upper bound on the candidates produced by one :func:`generate_candidates` call."""
    total = 0
    for name in C:
        iv = intervals[name]
        if iv.kind.is_ordered:
            total += 2
        elif iv.kind is FeatureKind.BINARY:
            total += 1
        else:
            total += len(iv.labels) - 1
    return total


def _better(a: float, b: float, method: str) -> bool:
    return a > b if method == MAX else a < b


def _climb(start, y_start, C, epsilon, intervals, model, reps, method):
    best, y_best = start, y_start
    for _ in range(reps):
        cands = generate_candidates(best, C, epsilon, intervals)
        if not cands:
            break
        preds = predict_proba(model, cands)
        k = int(np.argmax(preds) if method == MAX else np.argmin(preds))
        if not _better(float(preds[k]), y_best, method):
            break
        best, y_best = cands[k], float(preds[k])
    return best, y_best


def _random_start(x, C, epsilon, intervals, rng, half):
    values = {}
    for name in C:
        iv = intervals[name]
        if iv.kind.is_ordered:
            values[name] = lattice_value(iv, epsilon[name], int(rng.integers(-half, half + 1)))
        else:
            values[name] = iv.labels[int(rng.integers(len(iv.labels)))]
    obs = dict(x)
    obs.update(values)
    return Observation(obs)


def initial_search(x, y_x, feature, method, config, model, intervals, epsilon, rng=None):
    """Hill-climb at the unshifted feature-of-interest value (t1 repetitions).

    With ``config.restarts`` > 0 the climb is also run from random lattice
    starts; a restart result replaces the default one only if strictly better.
    """
    C = [n for n in intervals if n != feature]
    best = _climb(x, y_x, C, epsilon, intervals, model, config.nsteps[0], method)
    if config.restarts:
        rng = rng if rng is not None else np.random.default_rng(config.seed)
        for _ in range(config.restarts):
            s = _random_start(x, C, epsilon, intervals, rng, config.half)
            y_s = float(predict_proba(model, [s])[0])
            cand = _climb(s, y_s, C, epsilon, intervals, model, config.nsteps[0], method)
            if _better(cand[1], best[1], method):
                best = cand
    return best


def muce_search(
    x: Observation,
    feature: str,
    method: str,
    direction: int,
    config: MuceConfig,
    model: Predictor,
    intervals: Mapping[str, StabilityInterval],
    start: tuple[Observation, float],
    epsilon: Mapping[str, float],
) -> list[tuple[int, Observation, float]]:
    """One direction of the search, after the shared initial iteration.

    For n = 1..N/2 the feature of interest is moved to lattice offset
    ``direction * n`` from its original value, the shifted point is scored,
    and the other features are hill-climbed for ``nsteps[n]`` repetitions
    (strict improvement only). Returns ``(signed index, observation, prediction)``
    per iteration.
    """
    if method not in (MAX, MIN):
        raise ValueError(f"method must be {MAX!r} or {MIN!r}")
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    C = [n for n in intervals if n != feature]
    iv = intervals[feature]
    cur, _ = start
    out = []
    for n in range(1, config.half + 1):
        cur = cur.replace(feature, lattice_value(iv, epsilon[feature], direction * n))
        y = float(predict_proba(model, [cur])[0])
        cur, y = _climb(cur, y, C, epsilon, intervals, model, config.nsteps[n], method)
        out.append((direction * n, cur, y))
    return out


def compute_muce(
    grid: ExplanationGrid,
    x: Mapping,
    feature: str,
    model: Predictor,
    config: MuceConfig = MuceConfig(),
    n_local: int = DEFAULT_N_LOCAL,
    intervals: Mapping[str, StabilityInterval] | None = None,
) -> MuceResult:
    """Max/min MUCE curves for ``feature`` around ``x``.

    Ordered features are indexed by signed iteration -N/2..N/2. Binary and
    categorical features get one position per allowed value, each explored
    like the initial iteration.
    """
    x = validate_observation(x, grid.schema)
    spec = grid.feature(feature).spec
    if intervals is None:
        intervals = stability_intervals(grid, x)
    intervals = {n: intervals[n] for n in grid.feature_names}
    epsilon = resolve_epsilon(grid, config)
    ice = compute_ice_local(grid, x, feature, model, n_local, interval=intervals[feature])
    rng = np.random.default_rng([config.seed, grid.feature_names.index(feature)])
    curves = {MAX: {}, MIN: {}}

    if spec.kind.is_ordered:
        y_x = float(predict_proba(model, [x])[0])
        for method in (MAX, MIN):
            start = initial_search(x, y_x, feature, method, config, model, intervals, epsilon, rng)
            curves[method][0] = start
            for direction in (1, -1):
                for i, obs, y in muce_search(x, feature, method, direction, config, model, intervals, start, epsilon):
                    curves[method][i] = (obs, y)
    else:
        positions = intervals[feature].labels
        for pos, value in enumerate(positions):
            s = x.replace(feature, value)
            y_s = float(predict_proba(model, [s])[0])
            for method in (MAX, MIN):
                curves[method][pos] = initial_search(s, y_s, feature, method, config, model, intervals, epsilon, rng)

    max_curve, min_curve = MuceCurve(curves[MAX]), MuceCurve(curves[MIN])
    return MuceResult(
        feature,
        spec.kind,
        max_curve,
        min_curve,
        ice,
        max_curve.extremum(MAX),
        min_curve.extremum(MIN),
        config.n_iterations,
    )


def call_budget(
    config: MuceConfig,
    kind: FeatureKind,
    n_candidates: int,
    n_positions: int = 0,
    n_ice: int = 0,
) -> int:
    """Maximum number of observations :func:`compute_muce` sends to the model.

    ``n_candidates`` is :func:`candidate_count` over the other features,
    ``n_positions`` the number of allowed values for binary/categorical
    features of interest and ``n_ice`` the restricted ICE point count.
    """
    t1 = config.nsteps[0]
    initial = (1 + config.restarts) * t1 * n_candidates + config.restarts
    if kind.is_ordered:
        per_direction = sum(1 + config.nsteps[n] * n_candidates for n in range(1, config.half + 1))
        return n_ice + 1 + 2 * (initial + 2 * per_direction)
    return n_ice + n_positions * (1 + 2 * initial)


def _exact_delta(a: float, b: float) -> float:
    """A delta d with ``a + d == b`` in floating point."""
    d = b - a
    for _ in range(64):
        s = a + d
        if s == b:
            break
        d = np.nextafter(d, math.inf if s < b else -math.inf).item()
    return d


def extract_feature_variation(result: MuceResult, x: Mapping, which: str) -> FeatureVariation:
    """Changes to apply to ``x`` to reach the extremal max/min observation."""
    if which not in (MAX, MIN):
        raise ValueError(f"which must be {MAX!r} or {MIN!r}")
    target = (result.extremal_max if which == MAX else result.extremal_min)[0]
    deltas = {}
    for name, v in x.items():
        t = target[name]
        if isinstance(v, str):
            deltas[name] = t
        elif isinstance(v, float) or isinstance(t, float):
            deltas[name] = _exact_delta(float(v), float(t)) if v != t else 0.0
        else:
            deltas[name] = t - v
    return FeatureVariation(result.feature, which, deltas)
