"""Explanation grid: per-feature value grids, stability ranges and category ordering.

The grid is fitted once on training data and persisted as JSON so that ICE
and MUCE explanations can be produced at inference time without the data.
"""

from __future__ import annotations

import json
import math
import warnings
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import (
    Dataset,
    FeatureKind,
    FeatureSpec,
    MuceError,
    Observation,
    Scaling,
    UnknownFeature,
    Value,
    encode_for_distance,
    encode_many,
)

GRID_VERSION = "muce-grid/1"

DEFAULT_GRID_SIZE = 50
DEFAULT_STABILITY_FRACTION = 0.05
DEFAULT_K_CATEGORIES = 5

CategoryOrderer = Callable[[Observation], Sequence[str]]


class EmptyDataset(MuceError):
    pass


class NotCategorical(MuceError):
    pass


class GridFormatError(MuceError):
    pass


class EmptyCategoryWarning(UserWarning):
    pass


def round_half_up(v: float) -> int:
    """Round to the nearest integer, halves away from -inf."""
    return int(math.floor(v + 0.5))


@dataclass(frozen=True)
class FeatureGrid:
    spec: FeatureSpec
    values: tuple
    observed_min: float | None = None
    observed_max: float | None = None
    delta: float | None = None

    @property
    def kind(self) -> FeatureKind:
        return self.spec.kind


@dataclass(frozen=True)
class CategoryOrderModel:
    """Ranks the labels of one categorical feature by proximity to an observation.

    In ``"rows"`` mode the encoded training rows are kept and a label's score
    is the mean distance to its ``k`` nearest rows. In ``"centroids"`` mode
    only per-label centroids are kept and the score is the centroid distance.
    """

    feature: str
    schema: tuple[FeatureSpec, ...]
    scaling: Scaling
    k: int
    mode: str
    encodings: np.ndarray
    labels: tuple[str, ...]

    @classmethod
    def fit(cls, data: Dataset, feature: str, k: int, mode: str = "rows") -> CategoryOrderModel:
        spec = data.spec(feature)
        if spec.kind is not FeatureKind.CATEGORICAL:
            raise NotCategorical(f"{feature!r} is not categorical")
        if mode not in ("rows", "centroids"):
            raise ValueError("mode must be 'rows' or 'centroids'")
        scaling = Scaling.fit(data)
        enc = encode_many(data.rows, data.schema, feature, scaling)
        labels = np.asarray([r[feature] for r in data.rows], dtype=object)
        if mode == "centroids":
            present = [c for c in spec.categories if np.any(labels == c)]
            enc = np.array([enc[labels == c].mean(axis=0) for c in present]).reshape(len(present), enc.shape[1])
            labels = np.asarray(present, dtype=object)
        else:
            # canonical row order so the persisted payload ignores input order
            order = sorted(range(len(enc)), key=lambda i: (tuple(enc[i]), labels[i]))
            enc, labels = enc[order], labels[order]
        return cls(feature, data.schema, scaling, int(k), mode, enc, tuple(labels))

    def scores(self, obs: Mapping) -> dict[str, float]:
        q = encode_for_distance(obs, self.schema, self.feature, self.scaling)
        dist = np.sqrt(((self.encodings - q) ** 2).sum(axis=1)) if len(self.labels) else np.zeros(0)
        labels = np.asarray(self.labels, dtype=object)
        out = {}
        for c in self.categories:
            d = dist[labels == c]
            if len(d) == 0:
                continue
            if self.mode == "rows":
                d = np.sort(d)[: min(self.k, len(d))]
            out[c] = float(d.mean())
        return out

    @property
    def categories(self) -> tuple[str, ...]:
        for s in self.schema:
            if s.name == self.feature:
                return s.categories
        raise UnknownFeature(self.feature)

    def rank(self, obs: Mapping) -> list[str]:
        scores = self.scores(obs)
        ranked = sorted(scores, key=lambda c: (scores[c], c))
        empty = sorted(c for c in self.categories if c not in scores)
        if empty:
            warnings.warn(f"{self.feature}: categories without training rows placed last: {empty}", EmptyCategoryWarning, stacklevel=2)
        return ranked + empty

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "k": self.k,
            "scaling": self.scaling.to_dict(),
            "labels": list(self.labels),
            "encodings": self.encodings.tolist(),
        }

    @classmethod
    def from_dict(cls, feature: str, schema, d: Mapping) -> CategoryOrderModel:
        enc = np.asarray(d["encodings"], dtype=float)
        if enc.size == 0:
            enc = enc.reshape(len(d["labels"]), -1)
        return cls(feature, tuple(schema), Scaling.from_dict(d["scaling"]), int(d["k"]), d["mode"], enc, tuple(d["labels"]))


@dataclass(frozen=True)
class StabilityInterval:
    """Region around an observation's value that perturbations may not leave.

    Ordered kinds use ``lower``/``upper``; binary and categorical kinds use
    the explicit ``labels`` tuple (values, in evaluation order).
    """

    feature: str
    kind: FeatureKind
    center: Value
    lower: Value | None = None
    upper: Value | None = None
    labels: tuple | None = None

    def clamp(self, value):
        if value < self.lower:
            return self.lower
        if value > self.upper:
            return self.upper
        return value

    def contains(self, value) -> bool:
        if self.labels is not None:
            return value in self.labels
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class ExplanationGrid:
    schema: tuple[FeatureSpec, ...]
    features: dict[str, FeatureGrid]
    stability_fraction: float = DEFAULT_STABILITY_FRACTION
    n: int = DEFAULT_GRID_SIZE
    k_categories: int = DEFAULT_K_CATEGORIES
    category_models: dict[str, CategoryOrderModel] = field(default_factory=dict)
    category_counts: dict[str, int] = field(default_factory=dict)
    clamp_intervals: bool = True

    @property
    def feature_names(self) -> list[str]:
        return [s.name for s in self.schema]

    def feature(self, name: str) -> FeatureGrid:
        try:
            return self.features[name]
        except KeyError:
            raise UnknownFeature(f"unknown feature {name!r}") from None

    def to_json(self) -> dict:
        feats = []
        for spec in self.schema:
            fg = self.features[spec.name]
            d = spec.to_dict()
            d.update(
                {
                    "min": fg.observed_min,
                    "max": fg.observed_max,
                    "delta": fg.delta,
                    "grid": list(fg.values),
                }
            )
            if spec.name in self.category_models:
                d["category_order"] = self.category_models[spec.name].to_dict()
            if spec.name in self.category_counts:
                d["category_count"] = self.category_counts[spec.name]
            feats.append(d)
        return {
            "version": GRID_VERSION,
            "stability_fraction": self.stability_fraction,
            "n": self.n,
            "k_categories": self.k_categories,
            "clamp_intervals": self.clamp_intervals,
            "features": feats,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> ExplanationGrid:
        if not isinstance(doc, Mapping) or doc.get("version") != GRID_VERSION:
            raise GridFormatError(f"unsupported grid version {doc.get('version') if isinstance(doc, Mapping) else doc!r}")
        try:
            schema = tuple(FeatureSpec.from_dict(d) for d in doc["features"])
            features, models, counts = {}, {}, {}
            for spec, d in zip(schema, doc["features"]):
                values = tuple(spec.check(v) for v in d["grid"])
                features[spec.name] = FeatureGrid(spec, values, d.get("min"), d.get("max"), d.get("delta"))
                if "category_count" in d:
                    counts[spec.name] = int(d["category_count"])
            for spec, d in zip(schema, doc["features"]):
                if "category_order" in d:
                    models[spec.name] = CategoryOrderModel.from_dict(spec.name, schema, d["category_order"])
            return cls(
                schema,
                features,
                float(doc["stability_fraction"]),
                int(doc["n"]),
                int(doc["k_categories"]),
                models,
                counts,
                bool(doc.get("clamp_intervals", True)),
            )
        except (KeyError, TypeError, ValueError, MuceError) as exc:
            raise GridFormatError(f"malformed grid document: {exc}") from exc

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> ExplanationGrid:
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise GridFormatError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_json(doc)


def _numeric_grid(spec: FeatureSpec, lo: float, hi: float, n: int) -> tuple:
    if spec.kind is FeatureKind.BINARY:
        return (0, 1)
    if lo == hi:
        return (int(lo),) if spec.kind.is_integral else (float(lo),)
    values = np.linspace(lo, hi, n)
    if spec.kind is FeatureKind.CONTINUOUS:
        return tuple(float(v) for v in values)
    return tuple(sorted({round_half_up(v) for v in values}))


def fit_grid(
    data: Dataset,
    n: int = DEFAULT_GRID_SIZE,
    stability_fraction: float = DEFAULT_STABILITY_FRACTION,
    k_categories: int = DEFAULT_K_CATEGORIES,
    *,
    delta_overrides: Mapping[str, float] | None = None,
    category_counts: Mapping[str, int] | None = None,
    category_mode: str = "rows",
    clamp_intervals: bool = True,
) -> ExplanationGrid:
    """Fit the explanation grid on training data.

    Parameters
    ----------
    data
        Training dataset; only per-feature min/max and, for categorical
        features, the category-ordering payload are retained.
    n
        Grid size for numeric features (integer kinds are rounded and
        deduplicated, binary features always get ``[0, 1]``).
    stability_fraction
        Half-width of the stability range as a fraction of the observed range.
    k_categories
        Neighbours per label when ranking categories.
    delta_overrides
        Per-feature half-widths replacing ``stability_fraction * range``,
        e.g. a known sensor error.
    category_counts
        Per-feature number of labels kept inside the stability range.
    category_mode
        ``"rows"`` keeps encoded training rows in the artifact; ``"centroids"``
        keeps only per-label centroids.
    clamp_intervals
        Clamp stability intervals to the observed range.
    """
    if len(data) == 0:
        raise EmptyDataset("cannot fit a grid on an empty dataset")
    if n < 2:
        raise ValueError("grid size must be at least 2")
    if not 0 < stability_fraction <= 0.5:
        raise ValueError("stability_fraction must be in (0, 0.5]")
    delta_overrides = dict(delta_overrides or {})
    features, models = {}, {}
    for spec in data.schema:
        if spec.kind is FeatureKind.CATEGORICAL:
            features[spec.name] = FeatureGrid(spec, tuple(spec.categories))
            models[spec.name] = CategoryOrderModel.fit(data, spec.name, k_categories, category_mode)
            continue
        col = data.column(spec.name)
        cast = int if spec.kind.is_integral else float
        lo, hi = cast(col.min()), cast(col.max())
        delta = float(delta_overrides.get(spec.name, stability_fraction * (hi - lo)))
        features[spec.name] = FeatureGrid(spec, _numeric_grid(spec, lo, hi, n), lo, hi, delta)
    unknown = (set(delta_overrides) | set(category_counts or {})) - set(features)
    if unknown:
        raise UnknownFeature(f"overrides name unknown features: {sorted(unknown)}")
    return ExplanationGrid(
        data.schema,
        features,
        float(stability_fraction),
        int(n),
        int(k_categories),
        models,
        dict(category_counts or {}),
        clamp_intervals,
    )


def order_categories(data: Dataset, feature: str, obs: Mapping, k: int) -> list[str]:
    """Labels of ``feature`` sorted by mean distance from ``obs`` to each label's k nearest rows."""
    return CategoryOrderModel.fit(data, feature, k).rank(obs)


def select_categories(
    ordered: Sequence[str],
    obs_label: str,
    stability_fraction: float,
    count: int | None = None,
) -> list[str]:
    """Keep the labels closest to the observation, always including its own.

    The count defaults to ``max(3, ceil(2 * stability_fraction * cardinality))``.
    """
    ordered = list(ordered)
    if obs_label not in ordered:
        raise ValueError(f"{obs_label!r} not among the ordered labels")
    m = len(ordered)
    if count is None:
        # tolerance keeps 2*0.05*20 == 2.0000000000000004 from rounding up
        count = max(3, math.ceil(2 * stability_fraction * m - 1e-9))
    if m <= max(3, count):
        return ordered
    kept = ordered[:count]
    if obs_label not in kept:
        kept[-1] = obs_label
    return kept


def stability_interval(
    grid: ExplanationGrid,
    obs: Mapping,
    feature: str,
    orderer: CategoryOrderer | None = None,
) -> StabilityInterval:
    """Stability range of ``feature`` around ``obs``.

    ``orderer`` replaces the fitted k-NN category ranking with a custom one
    (e.g. expert knowledge) for categorical features.
    """
    fg = grid.feature(feature)
    spec = fg.spec
    x = spec.check(obs[feature])
    if spec.kind is FeatureKind.BINARY:
        return StabilityInterval(feature, spec.kind, x, 0, 1, (0, 1))
    if spec.kind is FeatureKind.CATEGORICAL:
        if orderer is not None:
            ordered = list(orderer(obs))
        elif feature in grid.category_models:
            ordered = grid.category_models[feature].rank(obs)
        else:
            ordered = list(spec.categories)
        labels = select_categories(ordered, x, grid.stability_fraction, grid.category_counts.get(feature))
        return StabilityInterval(feature, spec.kind, x, labels=tuple(labels))
    lower, upper = x - fg.delta, x + fg.delta
    if spec.kind.is_integral:
        lower, upper = round_half_up(lower), round_half_up(upper)
    else:
        lower, upper = float(lower), float(upper)
    if grid.clamp_intervals:
        # never leave the observed range, but keep the observation itself inside
        lower = max(lower, min(fg.observed_min, x))
        upper = min(upper, max(fg.observed_max, x))
    if spec.kind is FeatureKind.ORDINAL:
        lower, upper = max(lower, spec.levels[0]), min(upper, spec.levels[1])
    return StabilityInterval(feature, spec.kind, x, lower, upper)


def stability_intervals(
    grid: ExplanationGrid,
    obs: Mapping,
    orderers: Mapping[str, CategoryOrderer] | None = None,
) -> dict[str, StabilityInterval]:
    orderers = orderers or {}
    return {name: stability_interval(grid, obs, name, orderers.get(name)) for name in grid.feature_names}
