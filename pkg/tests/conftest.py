import numpy as np
import pytest

from muce.features import Dataset, FeatureKind, FeatureSpec, Observation

KINDS = [FeatureKind.CONTINUOUS, FeatureKind.INTEGER, FeatureKind.BINARY, FeatureKind.ORDINAL, FeatureKind.CATEGORICAL]


def random_schema(rng, n_features, kinds=KINDS):
    schema = []
    for j in range(n_features):
        kind = kinds[int(rng.integers(len(kinds)))]
        if kind is FeatureKind.CATEGORICAL:
            m = int(rng.integers(2, 6))
            schema.append(FeatureSpec(f"f{j}", kind, categories=tuple("ABCDEF"[:m])))
        elif kind is FeatureKind.ORDINAL:
            schema.append(FeatureSpec(f"f{j}", kind, levels=(0, int(rng.integers(2, 6)))))
        else:
            schema.append(FeatureSpec(f"f{j}", kind))
    return schema


def random_value(rng, spec):
    if spec.kind is FeatureKind.CONTINUOUS:
        return float(rng.uniform(-3, 3))
    if spec.kind is FeatureKind.INTEGER:
        return int(rng.integers(0, 60))
    if spec.kind is FeatureKind.BINARY:
        return int(rng.integers(2))
    if spec.kind is FeatureKind.ORDINAL:
        lo, hi = spec.levels
        return int(rng.integers(lo, hi + 1))
    return spec.categories[int(rng.integers(len(spec.categories)))]


def random_dataset(rng, schema, n_rows=40):
    rows = [Observation({s.name: random_value(rng, s) for s in schema}) for _ in range(n_rows)]
    # every label present so category ordering has rows for it
    rows = list(rows)
    for s in schema:
        if s.kind is FeatureKind.CATEGORICAL:
            for k, c in enumerate(s.categories):
                rows[k] = rows[k].replace(s.name, c)
    labels = rng.integers(0, 2, size=n_rows).tolist()
    return Dataset(schema, rows, labels).with_observed_ranges()


def numeric_view(spec, value, label_codes):
    if spec.kind is FeatureKind.CATEGORICAL:
        return label_codes[spec.name][value]
    return float(value)


class PiecewisePredictor:
    """Random piecewise-constant plus piecewise-linear function clipped to [0, 1]."""

    concurrent_safe = True

    def __init__(self, rng, schema, data):
        self.schema = schema
        self.codes = {
            s.name: {c: float(rng.normal()) for c in s.categories} for s in schema if s.kind is FeatureKind.CATEGORICAL
        }
        self.terms = []
        for s in schema:
            col = np.array([numeric_view(s, r[s.name], self.codes) for r in data.rows])
            lo, hi = float(col.min()), float(col.max())
            for _ in range(int(rng.integers(1, 4))):
                t = float(rng.uniform(lo, hi)) if hi > lo else lo
                self.terms.append((s, t, float(rng.normal(0, 0.3)), float(rng.normal(0, 0.2)) / max(hi - lo, 1e-9)))
        self.bias = float(rng.uniform(0.3, 0.7))

    def __call__(self, obs):
        y = self.bias
        for s, t, jump, slope in self.terms:
            v = numeric_view(s, obs[s.name], self.codes)
            if v >= t:
                y += jump
            y += slope * max(v - t, 0.0)
        return min(max(y, 0.0), 1.0)

    def predict_proba(self, batch):
        return np.array([self(o) for o in batch])


class MonotonePredictor:
    """Sigmoid of a linear function: strictly monotone in every numeric feature."""

    concurrent_safe = True

    def __init__(self, rng, schema, data):
        self.schema = schema
        self.w = {}
        for s in schema:
            col = data.column(s.name).astype(float)
            scale = max(float(col.max() - col.min()), 1e-9)
            self.w[s.name] = float(rng.choice([-1, 1]) * rng.uniform(0.5, 2.0)) / scale
        self.center = {s.name: float(data.column(s.name).astype(float).mean()) for s in schema}

    def predict_proba(self, batch):
        z = np.array([sum(self.w[n] * (o[n] - self.center[n]) for n in self.w) for o in batch])
        return 1.0 / (1.0 + np.exp(-z))


class RecordingPredictor:
    """Pass-through that keeps every observation it is asked about."""

    def __init__(self, inner):
        self.inner = inner
        self.seen = []
        self.concurrent_safe = getattr(inner, "concurrent_safe", False)

    def predict_proba(self, batch):
        self.seen.extend(batch)
        return self.inner.predict_proba(batch)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance summary: one pass/fail line per criterion

_criteria = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    skipped = call.excinfo is not None and call.excinfo.errisinstance(pytest.skip.Exception)
    if call.when == "setup" and skipped:
        _criteria[number] = (title, True, "skipped")
    elif call.when == "call":
        prev = _criteria.get(number, (title, True, ""))
        ok = call.excinfo is None or skipped
        _criteria[number] = (title, prev[1] and ok, "skipped" if skipped else prev[2])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok, status = _criteria[number]
        verdict = "SKIP" if status == "skipped" else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"AC{number:<3} {verdict}  {title}")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def write_surrogate_housing(path, rng, n_rows=600):
    """Raw-housing-shaped CSV with plausible ranges (the real data is not bundled)."""
    cols = {
        "MedInc": rng.lognormal(1.2, 0.45, n_rows),
        "HouseAge": rng.integers(1, 53, n_rows).astype(float),
        "AveRooms": rng.lognormal(1.6, 0.25, n_rows),
        "AveBedrms": rng.normal(1.05, 0.1, n_rows),
        "Population": rng.integers(3, 6000, n_rows).astype(float),
        "AveOccup": rng.lognormal(1.05, 0.3, n_rows),
        "Latitude": rng.uniform(32.5, 42.0, n_rows).round(2),
        "Longitude": rng.uniform(-124.3, -114.3, n_rows).round(2),
        "MedHouseVal": rng.uniform(0.15, 5.0, n_rows),
    }
    names = list(cols)
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(n_rows):
            fh.write(",".join(repr(float(cols[n][i])) for n in names) + "\n")
    return cols
