"""Explanation reports (JSON) and the plots derived from them.

Reports are plain JSON-compatible dicts; every figure is rendered from the
report alone, so re-plotting a saved report reproduces the files exactly.
"""

from __future__ import annotations

import csv
import json
from collections.abc import Mapping, Sequence
from pathlib import Path

from .features import FeatureKind, format_value
from .grid import ExplanationGrid, stability_intervals
from .ice import DEFAULT_N_LOCAL
from .indices import ConfidenceIndices, summarize_observation, write_indices_csv
from .plots import COLORS, Bar, Marker, PlotSpec, Series, emit_plot, padded_range
from .predictors import Predictor
from .search import MAX, MIN, MuceConfig, MuceResult, extract_feature_variation

REPORT_VERSION = "muce-report/1"


def _feature_block(spec, ci: ConfidenceIndices, res: MuceResult, interval, x) -> dict:
    name = spec.name
    ice = res.ice_restricted
    block = {
        "feature": name,
        "kind": spec.kind.value,
        "value": x[name],
        "indices": {
            "stability": ci.stability,
            "uncertainty": ci.uncertainty,
            "uncertainty_minus": ci.uncertainty_minus,
            "uncertainty_plus": ci.uncertainty_plus,
        },
        "diagnostics": {"negative_gaps": list(ci.negative_gaps)},
        "interval": (
            {"labels": list(interval.labels)}
            if interval.labels is not None
            else {"lower": interval.lower, "upper": interval.upper}
        ),
        "ice": {
            "values": list(ice.values),
            "predictions": list(ice.predictions),
            "observation_prediction": ice.observation_prediction,
        },
        "muce": {
            "indices": res.max_curve.indices,
            "values": res.max_curve.values(name),
            "max": res.max_curve.predictions,
            "min": res.min_curve.predictions,
            "max_observations": [o.to_dict() for o in res.max_curve.observations],
            "min_observations": [o.to_dict() for o in res.min_curve.observations],
        },
    }
    for which, (obs, p) in ((MAX, res.extremal_max), (MIN, res.extremal_min)):
        block[f"extremal_{which}"] = {"observation": obs.to_dict(), "prediction": p}
        block[f"fv_{which}"] = dict(extract_feature_variation(res, x, which).deltas)
    return block


def build_report(
    grid: ExplanationGrid,
    obs: Mapping,
    model: Predictor,
    config: MuceConfig = MuceConfig(),
    n_local: int = DEFAULT_N_LOCAL,
    jobs: int = 1,
    model_id: str | None = None,
) -> dict:
    """Run every explanation for ``obs`` and assemble the report document."""
    rows, results = summarize_observation(grid, obs, model, config, n_local, jobs)
    intervals = stability_intervals(grid, obs)
    features = [
        _feature_block(spec, ci, results[spec.name], intervals[spec.name], obs)
        for spec, ci in zip(grid.schema, rows)
    ]
    return {
        "version": REPORT_VERSION,
        "model": model_id if model_id is not None else repr(model),
        "observation": dict(obs),
        "config": {
            **config.to_dict(),
            "n_local": n_local,
            "n_grid": grid.n,
            "stability_fraction": grid.stability_fraction,
            "k_categories": grid.k_categories,
        },
        "features": features,
    }


def report_indices(report: Mapping) -> list[ConfidenceIndices]:
    return [
        ConfidenceIndices(
            b["feature"],
            b["value"],
            b["indices"]["stability"],
            b["indices"]["uncertainty"],
            b["indices"]["uncertainty_plus"],
            b["indices"]["uncertainty_minus"],
            tuple(b["diagnostics"]["negative_gaps"]),
        )
        for b in report["features"]
    ]


def dumps_report(report: Mapping) -> str:
    return json.dumps(report, indent=1) + "\n"


def save_report(report: Mapping, path: str | Path) -> None:
    Path(path).write_text(dumps_report(report))


def load_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def plot_specs(block: Mapping) -> tuple[PlotSpec, PlotSpec]:
    """ICE and MUCE plot specifications for one feature block."""
    name, kind = block["feature"], FeatureKind(block["kind"])
    ice, muce = block["ice"], block["muce"]
    if kind.is_ordered:
        lo, hi = block["interval"]["lower"], block["interval"]["upper"]
        x_range = padded_range(float(lo), float(hi))
        ice_pred = dict(zip(ice["values"], ice["predictions"]))
        ice_series = Series("ice", tuple(ice["values"]), tuple(ice["predictions"]), COLORS["ice"], dashed=True)
        observation = Marker("observation", block["value"], ice["observation_prediction"], COLORS["observation"])
        ice_spec = PlotSpec(
            "line",
            f"ICE {name}",
            name,
            x_range,
            (Series("ice", ice_series.xs, ice_series.ys, COLORS["ice"]),),
            (
                observation,
                Marker("range_lower", lo, ice_pred[lo], COLORS["range"]),
                Marker("range_upper", hi, ice_pred[hi], COLORS["range"]),
            ),
        )
        ext_max, ext_min = block["extremal_max"], block["extremal_min"]
        muce_spec = PlotSpec(
            "line",
            f"MUCE {name}",
            name,
            x_range,
            (
                Series("max", tuple(muce["values"]), tuple(muce["max"]), COLORS["max"]),
                Series("min", tuple(muce["values"]), tuple(muce["min"]), COLORS["min"]),
                ice_series,
            ),
            (
                observation,
                Marker("extremal_max", ext_max["observation"][name], ext_max["prediction"], COLORS["extremal_max"], "dot"),
                Marker("extremal_min", ext_min["observation"][name], ext_min["prediction"], COLORS["extremal_min"], "dot"),
            ),
        )
        return ice_spec, muce_spec

    labels = [format_value(v) for v in ice["values"]]
    ranked = kind is FeatureKind.CATEGORICAL
    ann = [f"#{k + 1}" if ranked else "" for k in range(len(labels))]
    obs_pos = ice["values"].index(block["value"])
    observation = Marker("observation", obs_pos, ice["observation_prediction"], COLORS["observation"])
    ice_spec = PlotSpec(
        "bars",
        f"ICE {name}",
        name,
        bars=tuple(Bar(lbl, p, annotation=a) for lbl, p, a in zip(labels, ice["predictions"], ann)),
        markers=(observation,),
    )
    muce_spec = PlotSpec(
        "bars",
        f"MUCE {name}",
        name,
        bars=tuple(
            Bar(lbl, p, lo, hi, a) for lbl, p, lo, hi, a in zip(labels, ice["predictions"], muce["min"], muce["max"], ann)
        ),
        markers=(observation,),
    )
    return ice_spec, muce_spec


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in name)


def render_plots(report: Mapping, out_dir: str | Path) -> list[Path]:
    """Write ``ice_<feature>`` and ``muce_<feature>`` SVG+CSV pairs for every feature."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for block in report["features"]:
        ice_spec, muce_spec = plot_specs(block)
        written += emit_plot(ice_spec, out_dir / f"ice_{_safe(block['feature'])}")
        written += emit_plot(muce_spec, out_dir / f"muce_{_safe(block['feature'])}")
    return written


def write_fv_csv(report: Mapping, path: str | Path) -> None:
    """Feature-variation table: one row per (feature of interest, which, feature)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature_of_interest", "which", "feature", "variation"])
        for block in report["features"]:
            for which in (MAX, MIN):
                for name, d in block[f"fv_{which}"].items():
                    writer.writerow([block["feature"], which, name, format_value(d)])


def write_outputs(report: Mapping, out_dir: str | Path) -> list[Path]:
    """Report JSON, index table, FV table and all plots."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_report(report, out_dir / "report.json")
    write_indices_csv(report_indices(report), out_dir / "indices.csv")
    write_fv_csv(report, out_dir / "feature_variation.csv")
    return [out_dir / "report.json", out_dir / "indices.csv", out_dir / "feature_variation.csv"] + render_plots(
        report, out_dir
    )


__all__: Sequence[str] = [
    "REPORT_VERSION",
    "build_report",
    "dumps_report",
    "load_report",
    "plot_specs",
    "render_plots",
    "report_indices",
    "save_report",
    "write_outputs",
]
