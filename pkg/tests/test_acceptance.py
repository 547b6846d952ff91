"""Acceptance criteria, one test per criterion.

Run ``pytest tests/test_acceptance.py`` for the PASS/FAIL/SKIP summary.
"""

import functools
import json
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from conftest import (
    KINDS,
    MonotonePredictor,
    PiecewisePredictor,
    RecordingPredictor,
    random_dataset,
    random_schema,
)
from oracles import exhaustive_extrema, exhaustive_extrema_unordered

from muce.datasets import (
    HOUSING_SCHEMA,
    filter_outliers,
    generate_cross_2d,
    generate_ellipsoid_3d,
    load_raw_housing,
    transform_housing,
)
from muce.features import FeatureKind, Observation, write_dataset
from muce.geometry import CrossGeometry, EllipsoidGeometry
from muce.grid import ExplanationGrid, fit_grid, stability_intervals
from muce.ice import IceCurve, compute_ice_local
from muce.indices import compute_stability, compute_uncertainty_indices, summarize_observation
from muce.predictors import AnalyticBoundaryPredictor, ConstantPredictor
from muce.report import build_report, dumps_report
from muce.search import (
    MAX,
    MIN,
    MuceConfig,
    MuceCurve,
    MuceResult,
    call_budget,
    candidate_count,
    compute_muce,
    extract_feature_variation,
    resolve_epsilon,
)

criterion = pytest.mark.criterion
TOL = 1e-12


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


# shared property runs -------------------------------------------------------


def _instance(seed, monotone):
    """One random (grid, observation, predictor, config) instance."""
    rng = np.random.default_rng(seed)
    if monotone:
        # strictly monotone predictors reach the lattice corner only if t1
        # covers every other feature's walk to its interval edge
        n_features = int(rng.integers(2, 4))
        half = int(rng.integers(1, 4)) if n_features == 2 else 1
        t1 = 3 if n_features == 2 else int(rng.integers(2, 4))
        kinds = [FeatureKind.CONTINUOUS, FeatureKind.BINARY]
    else:
        n_features = int(rng.integers(2, 4))
        half = int(rng.integers(1, 4))
        t1 = int(rng.integers(0, 4))
        kinds = KINDS
    schema = random_schema(rng, n_features, kinds)
    data = random_dataset(rng, schema, 30)
    grid = fit_grid(data, stability_fraction=float(rng.uniform(0.03, 0.3)))
    inner = (MonotonePredictor if monotone else PiecewisePredictor)(rng, schema, data)
    x = data.rows[int(rng.integers(len(data)))]
    config = MuceConfig.from_counts(2 * half, t1, int(rng.integers(0, 3)))
    return grid, x, inner, config


@functools.cache
def property_runs():
    """Every feature of 200 piecewise and 60 monotone instances, with call logs."""
    runs = []
    for monotone, seeds in ((False, range(200)), (True, range(1000, 1060))):
        for seed in seeds:
            grid, x, inner, config = _instance(seed, monotone)
            intervals = stability_intervals(grid, x)
            for spec in grid.schema:
                model = RecordingPredictor(inner)
                res = compute_muce(grid, x, spec.name, model, config, intervals=intervals)
                runs.append(
                    dict(
                        grid=grid, x=x, feature=spec.name, kind=spec.kind, inner=inner, config=config,
                        intervals=intervals, result=res, seen=model.seen, monotone=monotone,
                    )
                )
    return runs


@functools.cache
def restart_runs():
    """Extra runs with restarts and larger N for the confinement/budget check."""
    runs = []
    for seed in range(2000, 2040):
        rng = np.random.default_rng(seed)
        schema = random_schema(rng, int(rng.integers(2, 6)))
        data = random_dataset(rng, schema, 30)
        grid = fit_grid(data, stability_fraction=float(rng.uniform(0.02, 0.5)))
        inner = PiecewisePredictor(rng, schema, data)
        x = data.rows[0]
        config = MuceConfig.from_counts(10, 5, 1, restarts=int(rng.integers(1, 4)), seed=seed)
        intervals = stability_intervals(grid, x)
        for spec in schema:
            model = RecordingPredictor(inner)
            res = compute_muce(grid, x, spec.name, model, config, intervals=intervals)
            runs.append(
                dict(grid=grid, x=x, feature=spec.name, kind=spec.kind, inner=inner, config=config,
                     intervals=intervals, result=res, seen=model.seen, monotone=False)
            )
    return runs


# AC1 -------------------------------------------------------------------------


def _ice(preds):
    return IceCurve("F", tuple(range(len(preds))), tuple(preds), 0, preds[0], True)


def _result(gmax, gmin, n, kind=FeatureKind.CONTINUOUS):
    o = Observation({"F": 0.0})
    mx = MuceCurve({i: (o, p) for i, p in gmax.items()})
    mn = MuceCurve({i: (o, p) for i, p in gmin.items()})
    return MuceResult("F", kind, mx, mn, _ice([0.5]), mx.extremum(MAX), mn.extremum(MIN), n)


@criterion(1, "index arithmetic")
def test_ac1_index_arithmetic():
    with Timer() as t:
        assert abs(compute_stability(_ice([0.3, 0.3, 0.3])) - 1.0) <= TOL
        assert abs(compute_stability(_ice([0.1, 0.4, 0.9])) - 0.2) <= TOL

        idx = range(-2, 3)
        u, up, um = compute_uncertainty_indices(_result({i: 0.8 for i in idx}, {i: 0.6 for i in idx}, 4))
        assert abs(u - 0.25) <= TOL and abs(up - 0.3) <= TOL and abs(um - 0.3) <= TOL

        d = {-1: 0.1, 0: 0.2, 1: 0.3}
        u, up, um = compute_uncertainty_indices(_result({i: 0.5 + g for i, g in d.items()}, {i: 0.5 for i in d}, 2))
        assert abs(u - 0.3) <= TOL and abs(up - 0.5) <= TOL and abs(um - 0.3) <= TOL
        assert abs(2 * u - (1 * (up + um) - 0.2)) <= TOL

        rng = np.random.default_rng(1)
        for _ in range(1000):
            half = int(rng.integers(1, 8))
            n = 2 * half
            lo = rng.uniform(0, 0.5, size=n + 1)
            hi = np.minimum(lo + rng.uniform(0, 0.5, size=n + 1), 1.0)
            gmax = {i: float(hi[i + half]) for i in range(-half, half + 1)}
            gmin = {i: float(lo[i + half]) for i in range(-half, half + 1)}
            u, up, um = compute_uncertainty_indices(_result(gmax, gmin, n))
            d0 = gmax[0] - gmin[0]
            assert abs(n * u - (half * (up + um) - d0)) <= TOL
    assert t.elapsed < 1.0


# AC2 -------------------------------------------------------------------------


@criterion(2, "constant-model law")
def test_ac2_constant_model_law():
    with Timer() as t:
        rng = np.random.default_rng(2)
        for _ in range(40):
            schema = random_schema(rng, int(rng.integers(2, 9)))
            data = random_dataset(rng, schema, 25)
            grid = fit_grid(data, stability_fraction=float(rng.uniform(0.02, 0.5)))
            c = float(rng.uniform(0, 1))
            x = data.rows[int(rng.integers(len(data)))]
            rows, _ = summarize_observation(grid, x, ConstantPredictor(c), MuceConfig.from_counts(6, 3, 1))
            assert len(rows) == len(schema)
            for r in rows:
                assert (r.stability, r.uncertainty, r.uncertainty_plus, r.uncertainty_minus) == (1.0, 0.0, 0.0, 0.0)
    assert t.elapsed < 5.0


# AC3 -------------------------------------------------------------------------


@criterion(3, "oracle bound")
def test_ac3_oracle_bound():
    with Timer() as t:
        runs = property_runs()
        instances = {(id(r["grid"]), r["x"]) for r in runs if not r["monotone"]}
        assert len(instances) >= 200
        equal_checked = 0
        for r in runs:
            res, ivs = r["result"], r["intervals"]
            eps = resolve_epsilon(r["grid"], r["config"])
            if r["kind"].is_ordered:
                oracle = exhaustive_extrema(r["x"], r["feature"], ivs, eps, r["inner"], r["config"].half)
            else:
                oracle = exhaustive_extrema_unordered(r["x"], r["feature"], ivs, eps, r["inner"])
            assert sorted(oracle) == res.max_curve.indices == res.min_curve.indices
            for i, (omax, omin) in oracle.items():
                gmax, gmin = res.max_curve.points[i][1], res.min_curve.points[i][1]
                assert gmax <= omax + TOL and gmin >= omin - TOL
                if r["monotone"]:
                    assert abs(gmax - omax) <= TOL and abs(gmin - omin) <= TOL
                    equal_checked += 1
        assert equal_checked > 0
    assert t.elapsed < 60.0


# AC4 -------------------------------------------------------------------------


@criterion(4, "confinement and call budget")
def test_ac4_confinement_and_budget():
    n_obs = 0
    for r in property_runs() + restart_runs():
        ivs = r["intervals"]
        for o in r["seen"]:
            assert all(ivs[n].contains(o[n]) for n in ivs)
        for curve in (r["result"].max_curve, r["result"].min_curve):
            for o in curve.observations:
                assert all(ivs[n].contains(o[n]) for n in ivs)
        others = [n for n in ivs if n != r["feature"]]
        positions = 0 if r["kind"].is_ordered else len(ivs[r["feature"]].labels)
        budget = call_budget(
            r["config"], r["kind"], candidate_count(others, ivs), positions, len(r["result"].ice_restricted.values)
        )
        assert len(r["seen"]) <= budget
        n_obs += len(r["seen"])
    assert n_obs > 0


# AC5 -------------------------------------------------------------------------


def _sigmoid(z):
    return 1.0 / (1.0 + math.exp(-z))


@criterion(5, "qualitative boundary patterns")
def test_ac5_qualitative_patterns():
    with Timer() as t:
        data = generate_cross_2d()
        grid = fit_grid(data)
        cross = AnalyticBoundaryPredictor(CrossGeometry(), sharpness=10)
        geom = CrossGeometry()

        # (a) interior point near the lower edge of the right arm
        tp0 = {"F1": 0.81, "F2": -0.31}
        rows, _ = summarize_observation(grid, tp0, cross)
        stab = {r.feature: r.stability for r in rows}
        assert stab["F2"] < 0.3 and stab["F1"] > 0.95
        # closed form over the interval endpoints and the edge crossing
        ivs = stability_intervals(grid, tp0)
        d_lo = geom.signed_distance(np.array([[0.81, ivs["F2"].lower]]))[0]
        d_hi = geom.signed_distance(np.array([[0.81, ivs["F2"].upper]]))[0]
        closed = 1 - (_sigmoid(10 * d_hi) - _sigmoid(10 * d_lo))
        assert closed < 0.3 and abs(stab["F2"] - closed) < 0.02

        # (b) corner point: single-feature sweeps stay positive, joint moves do not
        corner = {"F1": 0.3, "F2": 0.3}
        _, results = summarize_observation(grid, corner, cross)
        for name in ("F1", "F2"):
            assert min(compute_ice_local(grid, corner, name, cross).predictions) > 0.5
        assert any(min(results[n].min_curve.predictions) < 0.5 for n in ("F1", "F2"))
        # closed form: the joint corner of both intervals is outside the cross
        civ = stability_intervals(grid, corner)
        assert geom.signed_distance(np.array([[civ["F1"].upper, civ["F2"].upper]]))[0] < 0

        # ellipsoid: the near-boundary axis is least stable
        edata = generate_ellipsoid_3d()
        egrid = fit_grid(edata)
        ell = AnalyticBoundaryPredictor(EllipsoidGeometry(), sharpness=10, positive="outside")
        rows, _ = summarize_observation(egrid, {"F1": 0.37, "F2": -0.97, "F3": 0.02}, ell)
        stab = {r.feature: r.stability for r in rows}
        assert stab["F2"] < min(stab["F1"], stab["F3"])
    assert t.elapsed < 10.0


# AC6 -------------------------------------------------------------------------


@criterion(6, "feature-variation round trip")
def test_ac6_fv_round_trip():
    count = 0
    for r in property_runs() + restart_runs():
        res, x = r["result"], r["x"]
        for which, (target, p) in ((MAX, res.extremal_max), (MIN, res.extremal_min)):
            moved = extract_feature_variation(res, x, which).apply(x)
            assert moved == target
            assert float(r["inner"].predict_proba([moved])[0]) == p
            count += 1
    assert count > 0


# AC7 -------------------------------------------------------------------------


@criterion(7, "dataset generators")
def test_ac7_generators(tmp_path):
    cross = generate_cross_2d()
    assert len(cross) == 400 and sum(cross.labels) == 132
    pts = np.array([[r["F1"], r["F2"]] for r, y in zip(cross.rows, cross.labels) if y == 1])
    assert CrossGeometry().contains(pts).all()

    ell = generate_ellipsoid_3d()
    assert len(ell) == 400 and sum(ell.labels) == 132
    pts = np.array([[r["F1"], r["F2"], r["F3"]] for r, y in zip(ell.rows, ell.labels) if y == 1])
    assert ((pts[:, 0] / 3) ** 2 + pts[:, 1] ** 2 + pts[:, 2] ** 2 > 1).all()

    for gen in (generate_cross_2d, generate_ellipsoid_3d):
        write_dataset(gen(seed=11), tmp_path / "a.csv")
        write_dataset(gen(seed=11), tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.schema.json").read_bytes() == (tmp_path / "b.schema.json").read_bytes()


# AC8 -------------------------------------------------------------------------

HOUSING_CSV = os.environ.get("MUCE_HOUSING_CSV")


@criterion(8, "housing pipeline")
@pytest.mark.skipif(not HOUSING_CSV, reason="set MUCE_HOUSING_CSV to the 20,640-row California housing CSV")
def test_ac8_housing_pipeline():
    with Timer() as t:
        raw = load_raw_housing(HOUSING_CSV)
        assert len(raw) == 20640
        features = [s.name for s in raw.schema if s.name != "medhouseval"]
        assert abs(len(filter_outliers(raw, features=features)) - 9490) <= 50
        out = transform_housing(raw)
        assert [(s.name, s.kind, s.categories, s.levels) for s in out.schema] == [
            (s.name, s.kind, s.categories, s.levels) for s in HOUSING_SCHEMA
        ]
        counts = np.bincount([r["medinc_ord"] for r in out.rows], minlength=5)
        assert counts.max() - counts.min() <= 1
        quads = [r["cardinal_point"] for r in out.rows]
        assert sum(quads.count(q) for q in ("NE", "NW", "SE", "SW")) == len(out)
    assert t.elapsed < 10.0


# AC9 -------------------------------------------------------------------------


def _cli(*args):
    proc = subprocess.run([sys.executable, "-m", "muce", *args], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


def _artifacts(out_dir: Path):
    return {p.name: p.read_bytes() for p in sorted(out_dir.iterdir()) if p.suffix in (".json", ".csv")}


@criterion(9, "end-to-end determinism")
def test_ac9_cli_determinism(tmp_path):
    write_dataset(generate_ellipsoid_3d(), tmp_path / "ell.csv")
    _cli("grid-fit", "--data", str(tmp_path / "ell.csv"), "--out", str(tmp_path / "grid.json"))
    base = [
        "explain", "--grid", str(tmp_path / "grid.json"), "--model", "knn:k=7",
        "--train-data", str(tmp_path / "ell.csv"), "--obs", "F1=0.37", "F2=-0.97", "F3=0.02",
        "--restarts", "2", "--seed", "5",
    ]
    max_jobs = str(max(os.cpu_count() or 1, 4))
    runs = []
    for k, jobs in enumerate(("1", "1", max_jobs, max_jobs)):
        out = tmp_path / f"run{k}"
        _cli(*base, "--jobs", jobs, "--out-dir", str(out))
        runs.append(_artifacts(out))
    assert "report.json" in runs[0] and any(n.startswith("muce_") for n in runs[0])
    for other in runs[1:]:
        assert other == runs[0]


# AC10 ------------------------------------------------------------------------


@criterion(10, "grid persistence")
def test_ac10_grid_persistence(tmp_path):
    config = MuceConfig.from_counts(4, 2, 1)
    for seed in range(50):
        rng = np.random.default_rng(10_000 + seed)
        schema = random_schema(rng, int(rng.integers(2, 5)))
        data = random_dataset(rng, schema, 25)
        grid = fit_grid(data, stability_fraction=float(rng.uniform(0.02, 0.4)))
        model = PiecewisePredictor(rng, schema, data)
        x = data.rows[int(rng.integers(len(data)))]
        path = tmp_path / f"grid{seed}.json"
        grid.save(path)
        loaded = ExplanationGrid.load(path)
        direct = dumps_report(build_report(grid, x, model, config, model_id="m"))
        reloaded = dumps_report(build_report(loaded, x, model, config, model_id="m"))
        assert direct == reloaded
        assert json.dumps(loaded.to_json()) == json.dumps(grid.to_json())
