"""Command-line interface.

Subcommands: ``grid-fit``, ``explain``, ``indices`` and
``dataset gen-cross | gen-ellipsoid | transform-housing``.

Exit codes: 0 success, 2 usage error (including an unusable model spec),
3 data error (grid, dataset or observation), 4 predictor failure. Failures
print a one-line JSON object ``{"error": <category>, "message": ...}`` on
stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence
from pathlib import Path

from .datasets import generate_cross_2d, generate_ellipsoid_3d, load_raw_housing, transform_housing
from .features import MuceError, Observation, read_dataset, validate_observation, write_dataset
from .geometry import CrossGeometry, EllipsoidGeometry
from .grid import ExplanationGrid, GridFormatError, fit_grid
from .indices import format_table, summarize_observation, write_indices_csv, write_indices_json
from .predictors import (
    AnalyticBoundaryPredictor,
    ConstantPredictor,
    PredictorFailure,
    SubprocessPredictor,
    fit_knn_predictor,
)
from .report import build_report, write_outputs
from .search import MuceConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PREDICTOR = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, category: str, message: str, code: int):
        super().__init__(message)
        self.category = category
        self.code = code


def _kv(items: Sequence[str] | None, what: str) -> dict[str, str]:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise CliError("usage", f"expected {what} as name=value, got {item!r}", EXIT_USAGE)
        out[key] = value
    return out


def _schema_path(csv_path: str, schema: str | None) -> Path:
    return Path(schema) if schema else Path(csv_path).with_suffix(".schema.json")


def _load_data(csv_path: str, schema: str | None, category: str = "bad-data"):
    try:
        return read_dataset(csv_path, _schema_path(csv_path, schema))
    except (OSError, ValueError, MuceError) as exc:
        raise CliError(category, str(exc), EXIT_DATA) from exc


def _load_grid(path: str) -> ExplanationGrid:
    try:
        return ExplanationGrid.load(path)
    except (OSError, GridFormatError) as exc:
        raise CliError("bad-grid", str(exc), EXIT_DATA) from exc


def _parse_opts(text: str) -> dict[str, str]:
    return dict(p.split("=", 1) for p in text.split(",") if p) if text else {}


def build_model(spec: str, grid: ExplanationGrid, args) -> object:
    """Resolve a ``--model`` string.

    ``constant:<p>``, ``cross[:s=..,positive=inside|outside,L=..,W=..]``,
    ``ellipsoid[:s=..,positive=..]``, ``knn:k=<k>`` (with ``--train-data``)
    or ``cmd:<shell command>``.
    """
    name, _, rest = spec.partition(":")
    try:
        if name == "constant":
            return ConstantPredictor(float(rest))
        if name == "cmd":
            if not rest:
                raise ValueError("empty command")
            return SubprocessPredictor(rest, grid.feature_names)
        opts = _parse_opts(rest)
        if name == "cross":
            geom = CrossGeometry(float(opts.get("L", 1.4)), float(opts.get("W", 0.35)))
            return AnalyticBoundaryPredictor(geom, float(opts.get("s", 10.0)), opts.get("positive", "inside"))
        if name == "ellipsoid":
            return AnalyticBoundaryPredictor(
                EllipsoidGeometry(), float(opts.get("s", 10.0)), opts.get("positive", "outside")
            )
        if name == "knn":
            if not args.train_data:
                raise ValueError("knn models need --train-data")
            data = _load_data(args.train_data, args.train_schema)
            return fit_knn_predictor(data, int(opts.get("k", 5)))
    except CliError:
        raise
    except (ValueError, TypeError, MuceError) as exc:
        raise CliError("bad-model", f"{spec!r}: {exc}", EXIT_USAGE) from exc
    raise CliError("bad-model", f"unknown model {spec!r}", EXIT_USAGE)


def _observation(grid: ExplanationGrid, args) -> Observation:
    try:
        if args.row is not None:
            if not args.data:
                raise ValueError("--row needs --data")
            data = read_dataset(args.data, _schema_path(args.data, args.schema))
            row = data.rows[args.row]
            return validate_observation({n: row[n] for n in grid.feature_names}, grid.schema)
        raw = _kv(args.obs, "observation value")
        specs = {s.name: s for s in grid.schema}
        values = {}
        for key, text in raw.items():
            if key not in specs:
                raise ValueError(f"unknown feature {key!r}")
            values[key] = specs[key].coerce(text)
        return validate_observation(values, grid.schema)
    except CliError:
        raise
    except (OSError, IndexError, ValueError, MuceError) as exc:
        raise CliError("bad-observation", str(exc), EXIT_DATA) from exc


def _config(args) -> MuceConfig:
    try:
        return MuceConfig.from_counts(args.muce_n, args.t1, args.ti, restarts=args.restarts, seed=args.seed)
    except ValueError as exc:
        raise CliError("usage", str(exc), EXIT_USAGE) from exc


def cmd_grid_fit(args) -> int:
    data = _load_data(args.data, args.schema)
    deltas = {k: float(v) for k, v in _kv(args.delta, "delta override").items()}
    counts = {k: int(v) for k, v in _kv(args.category_count, "category count").items()}
    try:
        grid = fit_grid(
            data,
            args.n_grid,
            args.stability_fraction,
            args.k_categories,
            delta_overrides=deltas,
            category_counts=counts,
            category_mode="centroids" if args.centroids else "rows",
            clamp_intervals=not args.no_clamp,
        )
    except (ValueError, MuceError) as exc:
        raise CliError("bad-data", str(exc), EXIT_DATA) from exc
    grid.save(args.out)
    return EXIT_OK


def _explain(args, with_plots: bool) -> int:
    grid = _load_grid(args.grid)
    model = build_model(args.model, grid, args)
    obs = _observation(grid, args)
    config = _config(args)
    try:
        if with_plots:
            report = build_report(grid, obs, model, config, args.n_local, args.jobs, model_id=args.model)
            write_outputs(report, args.out_dir)
            return EXIT_OK
        rows, _ = summarize_observation(grid, obs, model, config, args.n_local, args.jobs)
    except PredictorFailure as exc:
        raise CliError("predictor-failure", str(exc), EXIT_PREDICTOR) from exc
    print(format_table(rows))
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_indices_csv(rows, out / "indices.csv")
        write_indices_json(rows, out / "indices.json")
    return EXIT_OK


def cmd_explain(args) -> int:
    return _explain(args, with_plots=True)


def cmd_indices(args) -> int:
    return _explain(args, with_plots=False)


def cmd_gen_cross(args) -> int:
    geom = CrossGeometry(args.half_length, args.half_width)
    write_dataset(generate_cross_2d(args.n_total, args.n_positive, geom, args.seed), args.out)
    return EXIT_OK


def cmd_gen_ellipsoid(args) -> int:
    write_dataset(generate_ellipsoid_3d(args.n_total, args.n_positive, args.seed), args.out)
    return EXIT_OK


def cmd_transform_housing(args) -> int:
    try:
        data = transform_housing(load_raw_housing(args.input))
    except (OSError, MuceError) as exc:
        raise CliError("bad-data", str(exc), EXIT_DATA) from exc
    write_dataset(data, args.out)
    return EXIT_OK


def _explain_flags(p: argparse.ArgumentParser, plots: bool) -> None:
    p.add_argument("--grid", required=True, help="grid JSON from grid-fit")
    p.add_argument("--model", required=True, help="constant:<p> | cross | ellipsoid | knn:k=<k> | cmd:<command>")
    p.add_argument("--train-data", help="training CSV for knn models")
    p.add_argument("--train-schema", help="schema sidecar for --train-data")
    p.add_argument("--obs", nargs="+", metavar="NAME=VALUE", help="inline observation")
    p.add_argument("--row", type=int, help="row index of --data to explain")
    p.add_argument("--data", help="CSV holding the observation for --row")
    p.add_argument("--schema", help="schema sidecar for --data")
    p.add_argument("--n-local", type=int, default=11)
    p.add_argument("--muce-n", type=int, default=10)
    p.add_argument("--t1", type=int, default=5)
    p.add_argument("--ti", type=int, default=1)
    p.add_argument("--restarts", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="features explained in parallel")
    p.add_argument("--out-dir", required=plots)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="muce", description="Local ICE/MUCE explanations with confidence indices.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("grid-fit", help="fit and save an explanation grid")
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.add_argument("--out", required=True)
    p.add_argument("--n-grid", type=int, default=50)
    p.add_argument("--stability-fraction", type=float, default=0.05)
    p.add_argument("--k-categories", type=int, default=5)
    p.add_argument("--delta", nargs="+", metavar="NAME=DELTA", help="per-feature stability half-width")
    p.add_argument("--category-count", nargs="+", metavar="NAME=COUNT")
    p.add_argument("--centroids", action="store_true", help="store per-category centroids instead of training rows")
    p.add_argument("--no-clamp", action="store_true", help="do not clamp stability intervals to the observed range")
    p.set_defaults(func=cmd_grid_fit)

    p = sub.add_parser("explain", help="full report with plots")
    _explain_flags(p, plots=True)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("indices", help="index table only")
    _explain_flags(p, plots=False)
    p.set_defaults(func=cmd_indices)

    ds = sub.add_parser("dataset", help="dataset generators and transforms")
    dsub = ds.add_subparsers(dest="dataset_command", required=True)
    for name, fn in (("gen-cross", cmd_gen_cross), ("gen-ellipsoid", cmd_gen_ellipsoid)):
        p = dsub.add_parser(name)
        p.add_argument("--n-total", type=int, default=400)
        p.add_argument("--n-positive", type=int, default=132)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True)
        if name == "gen-cross":
            p.add_argument("--half-length", type=float, default=1.4)
            p.add_argument("--half-width", type=float, default=0.35)
        p.set_defaults(func=fn)
    p = dsub.add_parser("transform-housing")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform_housing)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
        return exc.code
    except PredictorFailure as exc:
        print(json.dumps({"error": "predictor-failure", "message": str(exc)}), file=sys.stderr)
        return EXIT_PREDICTOR
    except (MuceError, ValueError) as exc:
        print(json.dumps({"error": "bad-data", "message": str(exc)}), file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
