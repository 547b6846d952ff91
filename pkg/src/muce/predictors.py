"""Prediction contract and reference predictors.

Any object with ``predict_proba(batch) -> array of probabilities`` and a
``concurrent_safe`` attribute can be explained. The batch is a sequence of
:class:`~muce.features.Observation`.
"""

from __future__ import annotations

import csv
import io
import shlex
import subprocess
from collections.abc import Callable, Sequence
from typing import Protocol, runtime_checkable

import numpy as np
from scipy.special import expit

from .features import (
    Dataset,
    MuceError,
    Observation,
    Scaling,
    encode_many,
    format_value,
)
from .geometry import CrossGeometry, EllipsoidGeometry


class PredictorFailure(MuceError):
    pass


class MissingLabels(MuceError):
    pass


class KTooLarge(MuceError):
    pass


@runtime_checkable
class Predictor(Protocol):
    concurrent_safe: bool

    def predict_proba(self, batch: Sequence[Observation]) -> np.ndarray: ...


def predict_proba(model: Predictor, batch: Sequence[Observation]) -> np.ndarray:
    """Call ``model`` on ``batch`` and check the output contract."""
    batch = list(batch)
    if not batch:
        return np.zeros(0)
    try:
        out = np.asarray(model.predict_proba(batch), dtype=float).reshape(-1)
    except PredictorFailure:
        raise
    except Exception as exc:
        raise PredictorFailure(f"{type(model).__name__} failed on a batch of {len(batch)}: {exc}") from exc
    if out.shape != (len(batch),):
        raise PredictorFailure(f"expected {len(batch)} probabilities, got {out.shape[0]}")
    if not np.all((out >= 0.0) & (out <= 1.0)):
        raise PredictorFailure("predictor returned values outside [0, 1]")
    return out


class ConstantPredictor:
    concurrent_safe = True

    def __init__(self, value: float):
        self.value = float(value)

    def predict_proba(self, batch):
        return np.full(len(batch), self.value)

    def __repr__(self):
        return f"constant:{self.value!r}"


class FunctionPredictor:
    """Wrap a per-observation function ``f(obs) -> probability``."""

    concurrent_safe = True

    def __init__(self, fn: Callable[[Observation], float], name: str = "function"):
        self.fn = fn
        self.name = name

    def predict_proba(self, batch):
        return np.fromiter((self.fn(obs) for obs in batch), dtype=float, count=len(batch))

    def __repr__(self):
        return self.name


class AnalyticBoundaryPredictor:
    """Sigmoid of the signed distance to a geometric class boundary.

    ``positive`` selects which side of the boundary is the positive class
    (``"inside"`` or ``"outside"``).
    """

    concurrent_safe = True

    def __init__(
        self,
        region: CrossGeometry | EllipsoidGeometry,
        sharpness: float = 10.0,
        positive: str = "inside",
        features: Sequence[str] | None = None,
    ):
        if sharpness <= 0:
            raise ValueError("sharpness must be positive")
        if positive not in ("inside", "outside"):
            raise ValueError("positive must be 'inside' or 'outside'")
        self.region = region
        self.sharpness = float(sharpness)
        self.positive = positive
        dim = len(region.center)
        self.features = tuple(features) if features is not None else tuple(f"F{i + 1}" for i in range(dim))
        if len(self.features) != dim:
            raise ValueError(f"region is {dim}-dimensional but {len(self.features)} features were given")

    def signed_distance(self, points) -> np.ndarray:
        d = self.region.signed_distance(points)
        return d if self.positive == "inside" else -d

    def predict_points(self, points) -> np.ndarray:
        return expit(self.sharpness * self.signed_distance(points))

    def predict_proba(self, batch):
        pts = np.array([[float(obs[f]) for f in self.features] for obs in batch], dtype=float)
        return self.predict_points(pts)

    def __repr__(self):
        kind = "cross" if isinstance(self.region, CrossGeometry) else "ellipsoid"
        return f"{kind}:s={self.sharpness!r},positive={self.positive}"


class KnnProbabilityPredictor:
    """Fraction of positive labels among the k nearest training rows.

    Rows are embedded with :func:`~muce.features.encode_for_distance` (all
    features); distance ties go to the lowest row index.
    """

    concurrent_safe = True

    def __init__(self, schema, encodings: np.ndarray, labels: np.ndarray, k: int, scaling: Scaling):
        self.schema = tuple(schema)
        self.encodings = np.asarray(encodings, dtype=float)
        self.labels = np.asarray(labels, dtype=int)
        self.k = int(k)
        self.scaling = scaling

    def predict_proba(self, batch):
        q = encode_many(batch, self.schema, None, self.scaling)
        d2 = ((q[:, None, :] - self.encodings[None, :, :]) ** 2).sum(-1)
        nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        return self.labels[nearest].sum(axis=1) / self.k

    def __repr__(self):
        return f"knn:k={self.k}"


def fit_knn_predictor(data: Dataset, k: int) -> KnnProbabilityPredictor:
    if data.labels is None:
        raise MissingLabels("k-NN predictor needs a labelled dataset")
    if not 1 <= k <= len(data):
        raise KTooLarge(f"k={k} but the dataset has {len(data)} rows")
    scaling = Scaling.fit(data)
    enc = encode_many(data.rows, data.schema, None, scaling)
    return KnnProbabilityPredictor(data.schema, enc, np.asarray(data.labels), k, scaling)


class SubprocessPredictor:
    """External model behind a child process.

    Each batch is written to the command's stdin as CSV (header row of
    feature names, one row per observation); the command must print one
    probability per line on stdout.
    """

    concurrent_safe = True

    def __init__(self, command: str | Sequence[str], feature_names: Sequence[str], timeout: float = 60.0):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.feature_names = list(feature_names)
        self.timeout = timeout

    def predict_proba(self, batch):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.feature_names)
        for obs in batch:
            writer.writerow([format_value(obs[f]) for f in self.feature_names])
        try:
            proc = subprocess.run(
                self.command, input=buf.getvalue(), capture_output=True, text=True, timeout=self.timeout
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise PredictorFailure(f"could not run {self.command[0]!r}: {exc}") from exc
        if proc.returncode != 0:
            raise PredictorFailure(f"{self.command[0]!r} exited with {proc.returncode}: {proc.stderr.strip()}")
        lines = [ln for ln in proc.stdout.splitlines() if ln.strip()]
        try:
            return np.asarray([float(ln) for ln in lines], dtype=float)
        except ValueError as exc:
            raise PredictorFailure(f"unparseable output from {self.command[0]!r}: {exc}") from exc

    def __repr__(self):
        return "cmd:" + shlex.join(self.command)
