"""Local, model-agnostic explanations for a single observation.

Restricted ICE curves, MUCE max/min exploration curves and the stability and
uncertainty indices derived from them.
"""

from .features import (
    Dataset,
    FeatureKind,
    FeatureSpec,
    MuceError,
    Observation,
    Scaling,
    encode_for_distance,
    read_dataset,
    validate_observation,
    write_dataset,
)
from .geometry import CrossGeometry, EllipsoidGeometry
from .grid import (
    ExplanationGrid,
    StabilityInterval,
    fit_grid,
    order_categories,
    select_categories,
    stability_interval,
    stability_intervals,
)
from .ice import IceCurve, compute_ice, compute_ice_local
from .indices import (
    ConfidenceIndices,
    compute_stability,
    compute_uncertainty_indices,
    summarize_observation,
)
from .predictors import (
    AnalyticBoundaryPredictor,
    ConstantPredictor,
    FunctionPredictor,
    KnnProbabilityPredictor,
    PredictorFailure,
    SubprocessPredictor,
    fit_knn_predictor,
    predict_proba,
)
from .search import (
    FeatureVariation,
    MuceConfig,
    MuceCurve,
    MuceResult,
    compute_muce,
    extract_feature_variation,
    generate_candidates,
    muce_search,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticBoundaryPredictor",
    "ConfidenceIndices",
    "ConstantPredictor",
    "CrossGeometry",
    "Dataset",
    "EllipsoidGeometry",
    "ExplanationGrid",
    "FeatureKind",
    "FeatureSpec",
    "FeatureVariation",
    "FunctionPredictor",
    "IceCurve",
    "KnnProbabilityPredictor",
    "MuceConfig",
    "MuceCurve",
    "MuceError",
    "MuceResult",
    "Observation",
    "PredictorFailure",
    "Scaling",
    "StabilityInterval",
    "SubprocessPredictor",
    "compute_ice",
    "compute_ice_local",
    "compute_muce",
    "compute_stability",
    "compute_uncertainty_indices",
    "encode_for_distance",
    "extract_feature_variation",
    "fit_grid",
    "fit_knn_predictor",
    "generate_candidates",
    "muce_search",
    "order_categories",
    "predict_proba",
    "read_dataset",
    "select_categories",
    "stability_interval",
    "stability_intervals",
    "summarize_observation",
    "validate_observation",
    "write_dataset",
]
