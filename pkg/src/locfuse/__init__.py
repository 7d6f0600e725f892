"""RSSI-based indoor localization with 5G/WiFi fusion for attendance control."""

from .model import (
    OUTSIDE,
    RSSI_FLOOR,
    AccessPoint,
    Dataset,
    FeatureMatrix,
    LocfuseError,
    Position,
    RadioTechnology,
    Sample,
    Selector,
    Zone,
    feature_matrix,
    validate_dataset,
    zone_of,
)
from .propagation import (
    PropagationParams,
    Scenario,
    generate_dataset,
    path_loss_db,
    reference_scenario,
    simulate_range,
    simulate_rssi,
)
from .forest import (
    Forest,
    ForestKind,
    ForestParams,
    fit_forest,
    fit_tree,
    gini,
    predict_class,
    predict_position,
    variance_impurity,
)
from .locate import (
    FingerprintDb,
    RangeObservation,
    classify_pipeline,
    knn_locate,
    multilaterate,
    proximity_locate,
    regress_then_classify,
    rssi_to_range,
)
from .evaluation import (
    ExperimentConfig,
    ExperimentReport,
    Method,
    empirical_cdf,
    horizontal_error,
    monte_carlo_split,
    percentile,
    run_experiment,
)

__version__ = "0.1.0"
