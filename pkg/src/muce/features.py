"""Heterogeneous tabular feature model.

Observations are immutable name -> value mappings. Continuous features hold
floats, integer/binary/ordinal features hold ints and categorical features
hold string labels.
"""

from __future__ import annotations

import csv
import json
import math
import numbers
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

Value = float | int | str

SCHEMA_VERSION = 1


class MuceError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(MuceError):
    pass


class UnknownFeature(SchemaError):
    pass


class MissingFeature(SchemaError):
    pass


class KindMismatch(SchemaError):
    pass


class UnknownCategory(SchemaError):
    pass


class DataError(MuceError):
    pass


class FeatureKind(str, Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    BINARY = "binary"
    ORDINAL = "ordinal"
    CATEGORICAL = "categorical"

    @property
    def is_numeric(self) -> bool:
        return self is not FeatureKind.CATEGORICAL

    @property
    def is_integral(self) -> bool:
        return self in (FeatureKind.INTEGER, FeatureKind.BINARY, FeatureKind.ORDINAL)

    @property
    def is_ordered(self) -> bool:
        """Features whose values can be stepped by +/- epsilon."""
        return self in (FeatureKind.CONTINUOUS, FeatureKind.INTEGER, FeatureKind.ORDINAL)


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: FeatureKind
    observed_min: float | None = None
    observed_max: float | None = None
    categories: tuple[str, ...] = ()
    levels: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", FeatureKind(self.kind))
        object.__setattr__(self, "categories", tuple(self.categories))
        if self.levels is not None:
            object.__setattr__(self, "levels", (int(self.levels[0]), int(self.levels[1])))
        if self.kind is FeatureKind.CATEGORICAL:
            if not self.categories:
                raise SchemaError(f"categorical feature {self.name!r} needs a non-empty label set")
            if len(set(self.categories)) != len(self.categories):
                raise SchemaError(f"duplicate labels in categorical feature {self.name!r}")
        if self.kind is FeatureKind.ORDINAL and self.levels is None:
            raise SchemaError(f"ordinal feature {self.name!r} needs a level range")
        if self.levels is not None and self.levels[0] > self.levels[1]:
            raise SchemaError(f"empty level range for {self.name!r}")
        if (
            self.observed_min is not None
            and self.observed_max is not None
            and self.observed_min > self.observed_max
        ):
            raise SchemaError(f"observed_min > observed_max for {self.name!r}")

    def check(self, value) -> Value:
        """Return ``value`` if it is admissible for this feature, else raise."""
        kind = self.kind
        if kind is FeatureKind.CATEGORICAL:
            if not isinstance(value, str):
                raise KindMismatch(f"{self.name}: expected a category label, got {value!r}")
            if value not in self.categories:
                raise UnknownCategory(f"{self.name}: unknown category {value!r}")
            return value
        if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Real):
            raise KindMismatch(f"{self.name}: expected a number, got {value!r}")
        if kind is FeatureKind.CONTINUOUS:
            if not math.isfinite(value):
                raise KindMismatch(f"{self.name}: non-finite value {value!r}")
            return value
        if not isinstance(value, numbers.Integral):
            raise KindMismatch(f"{self.name}: expected an integer, got {value!r}")
        if kind is FeatureKind.BINARY and value not in (0, 1):
            raise KindMismatch(f"{self.name}: binary value must be 0 or 1, got {value!r}")
        if kind is FeatureKind.ORDINAL:
            lo, hi = self.levels
            if not lo <= value <= hi:
                raise KindMismatch(f"{self.name}: ordinal level {value} outside [{lo}, {hi}]")
        return value

    def coerce(self, raw) -> Value:
        """Convert a raw (e.g. CSV string) value to this feature's native type."""
        if self.kind is FeatureKind.CATEGORICAL:
            return self.check(str(raw))
        if isinstance(raw, str):
            raw = raw.strip()
            if raw == "":
                raise DataError(f"{self.name}: missing value")
            raw = float(raw)
        if self.kind is FeatureKind.CONTINUOUS:
            return self.check(float(raw))
        f = float(raw)
        if not f.is_integer():
            raise KindMismatch(f"{self.name}: expected an integer, got {raw!r}")
        return self.check(int(f))

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind.value}
        if self.categories:
            d["categories"] = list(self.categories)
        if self.levels is not None:
            d["levels"] = list(self.levels)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> FeatureSpec:
        levels = d.get("levels")
        return cls(
            name=d["name"],
            kind=FeatureKind(d["kind"]),
            categories=tuple(d.get("categories", ())),
            levels=tuple(levels) if levels is not None else None,
            observed_min=d.get("min"),
            observed_max=d.get("max"),
        )


class Observation(Mapping):
    """Immutable, hashable mapping of feature name to value."""

    __slots__ = ("_data", "_hash")

    def __init__(self, values: Mapping | Iterable[tuple[str, Value]] = ()):
        self._data = dict(values)
        self._hash = None

    def __getitem__(self, key: str) -> Value:
        return self._data[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._data.items()))
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, Observation):
            return self._data == other._data
        if isinstance(other, Mapping):
            return self._data == dict(other)
        return NotImplemented

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self._data.items())
        return f"Observation({inner})"

    def replace(self, name: str, value: Value) -> Observation:
        data = dict(self._data)
        data[name] = value
        return Observation(data)

    def to_dict(self) -> dict:
        return dict(self._data)


def validate_observation(obs: Mapping, schema: Sequence[FeatureSpec]) -> Observation:
    """Check ``obs`` against ``schema`` and return it unchanged.

    Numeric values are not range-checked: values outside the observed range
    are legal inputs.
    """
    names = {spec.name for spec in schema}
    for key in obs:
        if key not in names:
            raise UnknownFeature(f"unknown feature {key!r}")
    for spec in schema:
        if spec.name not in obs:
            raise MissingFeature(f"missing value for feature {spec.name!r}")
        spec.check(obs[spec.name])
    return obs if isinstance(obs, Observation) else Observation(obs)


@dataclass(frozen=True)
class Scaling:
    """Per-feature mean/stddev used to z-score numeric-like features."""

    mean: dict[str, float]
    std: dict[str, float]

    @classmethod
    def fit(cls, data: Dataset) -> Scaling:
        mean, std = {}, {}
        for spec in data.schema:
            if spec.kind.is_numeric:
                # sorted so the float sums do not depend on row order
                col = np.sort(data.column(spec.name).astype(float))
                mean[spec.name] = float(col.mean())
                std[spec.name] = float(col.std())
        return cls(mean, std)

    def to_dict(self) -> dict:
        return {"mean": dict(self.mean), "std": dict(self.std)}

    @classmethod
    def from_dict(cls, d: Mapping) -> Scaling:
        return cls(dict(d["mean"]), dict(d["std"]))


def encoding_layout(schema: Sequence[FeatureSpec], exclude: str | None = None) -> list[tuple[str, str | None]]:
    """Coordinate layout of :func:`encode_for_distance`.

    One ``(feature, None)`` entry per numeric-like feature and one
    ``(feature, label)`` entry per category of each categorical feature.
    """
    layout = []
    for spec in schema:
        if spec.name == exclude:
            continue
        if spec.kind is FeatureKind.CATEGORICAL:
            layout.extend((spec.name, label) for label in spec.categories)
        else:
            layout.append((spec.name, None))
    return layout


def encode_for_distance(
    obs: Mapping,
    schema: Sequence[FeatureSpec],
    exclude: str | None,
    scaling: Scaling,
) -> np.ndarray:
    """Embed a mixed-type observation as a real vector.

    Numeric-like features are z-scored (zero stddev maps to 0) and categorical
    features are one-hot encoded. ``exclude`` contributes no coordinates.
    """
    if exclude is not None and exclude not in {s.name for s in schema}:
        raise UnknownFeature(f"unknown feature {exclude!r}")
    out = []
    for spec in schema:
        if spec.name == exclude:
            continue
        value = spec.check(obs[spec.name])
        if spec.kind is FeatureKind.CATEGORICAL:
            out.extend(1.0 if value == label else 0.0 for label in spec.categories)
        else:
            sd = scaling.std[spec.name]
            out.append(0.0 if sd == 0 else (value - scaling.mean[spec.name]) / sd)
    return np.asarray(out, dtype=float)


def encode_many(
    rows: Sequence[Mapping],
    schema: Sequence[FeatureSpec],
    exclude: str | None,
    scaling: Scaling,
) -> np.ndarray:
    """Vectorised :func:`encode_for_distance` over a batch of rows."""
    layout = encoding_layout(schema, exclude)
    out = np.zeros((len(rows), len(layout)), dtype=float)
    col = 0
    for spec in schema:
        if spec.name == exclude:
            continue
        values = [spec.check(r[spec.name]) for r in rows]
        if spec.kind is FeatureKind.CATEGORICAL:
            index = {label: i for i, label in enumerate(spec.categories)}
            for r, v in enumerate(values):
                out[r, col + index[v]] = 1.0
            col += len(spec.categories)
        else:
            sd = scaling.std[spec.name]
            if sd != 0:
                out[:, col] = (np.asarray(values, dtype=float) - scaling.mean[spec.name]) / sd
            col += 1
    return out


@dataclass(frozen=True)
class Dataset:
    schema: tuple[FeatureSpec, ...]
    rows: tuple[Observation, ...]
    labels: tuple[int, ...] | None = None
    _columns: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "rows", tuple(validate_observation(r, self.schema) for r in self.rows))
        if self.labels is not None:
            labels = tuple(int(y) for y in self.labels)
            if len(labels) != len(self.rows):
                raise DataError("labels must have one entry per row")
            if any(y not in (0, 1) for y in labels):
                raise DataError("labels must be binary (0/1)")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def feature_names(self) -> list[str]:
        return [s.name for s in self.schema]

    def spec(self, name: str) -> FeatureSpec:
        for s in self.schema:
            if s.name == name:
                return s
        raise UnknownFeature(f"unknown feature {name!r}")

    def column(self, name: str) -> np.ndarray:
        if name not in self._columns:
            spec = self.spec(name)
            values = [r[name] for r in self.rows]
            self._columns[name] = np.asarray(values, dtype=object if spec.kind is FeatureKind.CATEGORICAL else float)
        return self._columns[name]

    def with_observed_ranges(self) -> Dataset:
        """Return a copy whose schema carries the observed min/max of each numeric column."""
        schema = []
        for spec in self.schema:
            if spec.kind.is_numeric and len(self.rows):
                col = self.column(spec.name)
                spec = replace(spec, observed_min=_native(spec, col.min()), observed_max=_native(spec, col.max()))
            schema.append(spec)
        return Dataset(tuple(schema), self.rows, self.labels)

    def subset(self, mask: Sequence[bool]) -> Dataset:
        keep = [i for i, m in enumerate(mask) if m]
        labels = None if self.labels is None else [self.labels[i] for i in keep]
        return Dataset(self.schema, [self.rows[i] for i in keep], labels)


def _native(spec: FeatureSpec, value) -> Value:
    return int(value) if spec.kind.is_integral else float(value)


def schema_to_json(schema: Sequence[FeatureSpec], label: str | None = "label") -> dict:
    return {"version": SCHEMA_VERSION, "label": label, "features": [s.to_dict() for s in schema]}


def schema_from_json(doc: Mapping) -> tuple[list[FeatureSpec], str | None]:
    if doc.get("version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {doc.get('version')!r}")
    return [FeatureSpec.from_dict(d) for d in doc["features"]], doc.get("label")


def read_dataset(csv_path: str | Path, schema_path: str | Path) -> Dataset:
    """Load a CSV file with a JSON schema sidecar.

    The sidecar lists each column's kind (plus ordinal levels and category
    labels) and optionally names the label column. Missing values are errors.
    """
    with open(schema_path) as fh:
        schema, label_col = schema_from_json(json.load(fh))
    rows, labels = [], []
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for spec in schema:
            if spec.name not in header:
                raise DataError(f"column {spec.name!r} missing from {csv_path}")
        if label_col is not None and label_col not in header:
            label_col = None
        for lineno, record in enumerate(reader, start=2):
            try:
                rows.append(Observation((s.name, s.coerce(record[s.name])) for s in schema))
                if label_col is not None:
                    labels.append(int(float(record[label_col])))
            except (ValueError, TypeError, SchemaError, DataError) as exc:
                raise DataError(f"{csv_path}:{lineno}: {exc}") from exc
    return Dataset(schema, rows, labels if label_col is not None else None).with_observed_ranges()


def write_dataset(data: Dataset, csv_path: str | Path, schema_path: str | Path | None = None) -> None:
    csv_path = Path(csv_path)
    if schema_path is None:
        schema_path = csv_path.with_suffix(".schema.json")
    label = "label" if data.labels is not None else None
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(data.feature_names + ([label] if label else []))
        for i, row in enumerate(data.rows):
            values = [format_value(row[n]) for n in data.feature_names]
            if label:
                values.append(str(data.labels[i]))
            writer.writerow(values)
    with open(schema_path, "w") as fh:
        json.dump(schema_to_json(data.schema, label), fh, indent=2)
        fh.write("\n")


def format_value(value: Value) -> str:
    # repr keeps floats round-trippable
    return repr(value) if isinstance(value, float) else str(value)
