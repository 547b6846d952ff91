"""Synthetic benchmark datasets and the housing transformation pipeline."""

from __future__ import annotations

import csv
import warnings
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .features import Dataset, FeatureKind, FeatureSpec, MuceError, Observation
from .geometry import CrossGeometry, EllipsoidGeometry


class ImpossibleGeometry(MuceError):
    pass


class SchemaMismatch(MuceError):
    pass


class EmptyResultWarning(UserWarning):
    pass


def _sample(rng, bounds, predicate, count, batch=4096):
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    out = np.empty((0, len(bounds)))
    attempts = 0
    while len(out) < count:
        pts = rng.uniform(lo, hi, size=(batch, len(bounds)))
        out = np.vstack([out, pts[predicate(pts)]])
        attempts += 1
        if attempts > 1000 and len(out) == 0:
            raise ImpossibleGeometry("class region has (numerically) zero volume inside the sampling box")
    return out[:count]


def _labelled(points_pos, points_neg, names, rng) -> Dataset:
    pts = np.vstack([points_pos, points_neg])
    labels = np.r_[np.ones(len(points_pos), int), np.zeros(len(points_neg), int)]
    order = rng.permutation(len(pts))
    schema = [FeatureSpec(n, FeatureKind.CONTINUOUS) for n in names]
    rows = [Observation((n, float(v)) for n, v in zip(names, p)) for p in pts[order]]
    return Dataset(schema, rows, labels[order].tolist()).with_observed_ranges()


def generate_cross_2d(
    n_total: int = 400,
    n_positive: int = 132,
    geometry: CrossGeometry = CrossGeometry(),
    seed: int = 0,
) -> Dataset:
    """Uniform points in the sampling box; positives inside the cross, negatives outside."""
    if not 0 <= n_positive <= n_total:
        raise ValueError("need 0 <= n_positive <= n_total")
    (x0, x1), (y0, y1) = geometry.bounds
    cx, cy = geometry.center
    L = geometry.half_length
    if cx - L < x0 or cx + L > x1 or cy - L < y0 or cy + L > y1:
        raise ImpossibleGeometry("the cross does not fit inside the sampling bounds")
    rng = np.random.default_rng(seed)
    pos = _sample(rng, geometry.bounds, geometry.contains, n_positive)
    neg = _sample(rng, geometry.bounds, lambda p: ~geometry.contains(p), n_total - n_positive)
    return _labelled(pos, neg, ("F1", "F2"), rng)


def generate_ellipsoid_3d(
    n_total: int = 400,
    n_positive: int = 132,
    seed: int = 0,
    geometry: EllipsoidGeometry = EllipsoidGeometry(),
) -> Dataset:
    """Uniform points in the sampling box; negatives inside the ellipsoid, positives outside."""
    if not 0 <= n_positive <= n_total:
        raise ValueError("need 0 <= n_positive <= n_total")
    for (lo, hi), c, r in zip(geometry.bounds, geometry.center, geometry.radii):
        if c - r < lo or c + r > hi:
            raise ImpossibleGeometry("the ellipsoid does not fit inside the sampling bounds")
    rng = np.random.default_rng(seed)
    pos = _sample(rng, geometry.bounds, lambda p: ~geometry.contains(p), n_positive)
    neg = _sample(rng, geometry.bounds, geometry.contains, n_total - n_positive)
    return _labelled(pos, neg, ("F1", "F2", "F3"), rng)


def filter_outliers(
    data: Dataset,
    low_pct: float = 5,
    high_pct: float = 95,
    features: Sequence[str] | None = None,
) -> Dataset:
    """Drop rows with any numeric value strictly outside its [low_pct, high_pct] percentiles.

    Percentiles are computed once on the input with linear interpolation.
    """
    names = features if features is not None else [s.name for s in data.schema if s.kind.is_numeric]
    keep = np.ones(len(data), dtype=bool)
    for name in names:
        col = data.column(name).astype(float)
        lo, hi = np.percentile(col, [low_pct, high_pct])
        keep &= (col >= lo) & (col <= hi)
    if not keep.any():
        warnings.warn("outlier filter removed every row", EmptyResultWarning, stacklevel=2)
    return data.subset(keep.tolist())


HOUSING_FEATURES = ("medinc", "houseage", "averooms", "avebedrms", "population", "aveoccup", "latitude", "longitude")
HOUSING_TARGET = "medhouseval"
_TARGET_ALIASES = ("medhouseval", "target", "median_house_value", "medianhousevalue")


def load_raw_housing(path: str | Path) -> Dataset:
    """Read the standard California housing CSV (sklearn column names, any case)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader)]
        records = list(reader)
    target = next((a for a in _TARGET_ALIASES if a in header), None)
    missing = [f for f in HOUSING_FEATURES if f not in header]
    if missing or target is None:
        raise SchemaMismatch(f"housing CSV lacks columns: {missing + ([] if target else ['target'])}")
    idx = {h: i for i, h in enumerate(header)}
    schema = [FeatureSpec(f, FeatureKind.CONTINUOUS) for f in HOUSING_FEATURES]
    schema.append(FeatureSpec(HOUSING_TARGET, FeatureKind.CONTINUOUS))
    cols = list(HOUSING_FEATURES) + [target]
    rows = []
    for lineno, rec in enumerate(records, start=2):
        try:
            rows.append(Observation((s.name, float(rec[idx[c]])) for s, c in zip(schema, cols)))
        except (ValueError, IndexError) as exc:
            raise SchemaMismatch(f"{path}:{lineno}: {exc}") from exc
    return Dataset(schema, rows)


def _median_split(col: np.ndarray) -> np.ndarray:
    # ties go to the upper class
    return (col >= np.median(col)).astype(int)


def equal_frequency_buckets(col: np.ndarray, n_buckets: int) -> np.ndarray:
    """Bucket by rank so bucket sizes differ by at most one (ties broken by row order)."""
    ranks = np.empty(len(col), dtype=int)
    ranks[np.argsort(col, kind="stable")] = np.arange(len(col))
    return ranks * n_buckets // len(col)


HOUSING_SCHEMA = (
    FeatureSpec("houseage", FeatureKind.INTEGER),
    FeatureSpec("averooms", FeatureKind.CONTINUOUS),
    FeatureSpec("avebedrms", FeatureKind.CONTINUOUS),
    FeatureSpec("aveoccup", FeatureKind.CONTINUOUS),
    FeatureSpec("population_bin", FeatureKind.BINARY),
    FeatureSpec("medinc_ord", FeatureKind.ORDINAL, levels=(0, 4)),
    FeatureSpec("cardinal_point", FeatureKind.CATEGORICAL, categories=("NE", "NW", "SE", "SW")),
)


def transform_housing(raw: Dataset, n_income_buckets: int = 5) -> Dataset:
    """Outlier filter, then binary/ordinal/categorical derivations of the raw features.

    The target becomes a median-split label, population a median-split
    binary feature, income an equal-frequency ordinal and latitude/longitude
    a quadrant label; the source columns are dropped.
    """
    names = set(raw.feature_names)
    missing = [c for c in (*HOUSING_FEATURES, HOUSING_TARGET) if c not in names]
    if missing:
        raise SchemaMismatch(f"raw housing data lacks {missing}")
    data = filter_outliers(raw, features=HOUSING_FEATURES)
    if len(data) == 0:
        raise SchemaMismatch("no rows left after outlier filtering")
    col = {c: data.column(c).astype(float) for c in (*HOUSING_FEATURES, HOUSING_TARGET)}
    labels = _median_split(col[HOUSING_TARGET])
    population_bin = _median_split(col["population"])
    medinc_ord = equal_frequency_buckets(col["medinc"], n_income_buckets)
    north = col["latitude"] >= np.median(col["latitude"])
    east = col["longitude"] >= np.median(col["longitude"])
    schema = list(HOUSING_SCHEMA)
    if n_income_buckets != 5:
        schema[5] = FeatureSpec("medinc_ord", FeatureKind.ORDINAL, levels=(0, n_income_buckets - 1))
    rows = []
    for i in range(len(data)):
        values = {
            "houseage": int(round(col["houseage"][i])),
            "averooms": float(col["averooms"][i]),
            "avebedrms": float(col["avebedrms"][i]),
            "aveoccup": float(col["aveoccup"][i]),
            "population_bin": int(population_bin[i]),
            "medinc_ord": int(medinc_ord[i]),
            "cardinal_point": ("N" if north[i] else "S") + ("E" if east[i] else "W"),
        }
        rows.append(Observation(values))
    return Dataset(schema, rows, labels.tolist()).with_observed_ranges()
