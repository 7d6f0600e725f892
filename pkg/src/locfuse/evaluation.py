"""Monte Carlo evaluation: repeated random train/test splits, per-technology
classification accuracy for both forest pipelines, and pooled horizontal
error distributions of the regression forest."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .forest import ForestKind, ForestParams, fit_forest, predict_classes, predict_positions
from .model import Dataset, LocfuseError, Position, Selector, feature_matrix, zones_of
from .seeding import derive_rng, derive_seed

# fixed indices so that a forest's seed does not depend on which technologies run
_TECH_KEY = {Selector.FIVE_G: 0, Selector.WIFI: 1, Selector.FUSION: 2}
ALL_TECHNOLOGIES = (Selector.FIVE_G, Selector.WIFI, Selector.FUSION)


class Method(enum.Enum):
    CLASSIFY = "classify"
    REGRESS = "regress"


_METHOD_KEY = {Method.CLASSIFY: 0, Method.REGRESS: 1}


@dataclass(frozen=True)
class ExperimentConfig:
    test_fraction: float = 0.20
    n_iterations: int = 1000
    master_seed: int = 0
    classify_params: ForestParams = field(default_factory=ForestParams)
    regress_params: ForestParams = field(default_factory=ForestParams)
    technologies: tuple[Selector, ...] = ALL_TECHNOLOGIES
    keep_predictions: bool = False

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise LocfuseError("bad-config", f"test_fraction {self.test_fraction} not in (0, 1)")
        if self.n_iterations < 1:
            raise LocfuseError("bad-config", "n_iterations must be >= 1")
        if self.master_seed < 0:
            raise LocfuseError("bad-config", "master_seed must be >= 0")
        if not self.technologies:
            raise LocfuseError("bad-config", "no technologies selected")
        object.__setattr__(self, "technologies", tuple(self.technologies))


@dataclass(frozen=True)
class Prediction:
    iteration: int
    technology: Selector
    sample_index: int
    truth_label: str
    classify_label: str
    regress_label: str
    estimate: tuple[float, float]


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    accuracies: dict[tuple[Selector, Method], np.ndarray]
    errors: dict[Selector, np.ndarray]
    predictions: list[Prediction] = field(default_factory=list)

    def mean_accuracy(self, tech: Selector, method: Method) -> float:
        return float(self.accuracies[(tech, method)].mean())

    def std_accuracy(self, tech: Selector, method: Method) -> float:
        return float(self.accuracies[(tech, method)].std())

    def cdf(self, tech: Selector) -> "EmpiricalCdf":
        return empirical_cdf(self.errors[tech])

    def cdf80(self, tech: Selector) -> float:
        return percentile(self.errors[tech], 0.8)

    def summary_rows(self) -> list[dict]:
        rows = []
        for tech in self.config.technologies:
            for method in Method:
                rows.append(
                    {
                        "technology": tech.value,
                        "method": method.value,
                        "mean_accuracy": self.mean_accuracy(tech, method),
                        "std_accuracy": self.std_accuracy(tech, method),
                        "cdf80_m": self.cdf80(tech) if method is Method.REGRESS else None,
                        "n_iterations": self.config.n_iterations,
                    }
                )
        return rows


@dataclass(frozen=True)
class EmpiricalCdf:
    """Right-continuous step function ``F(e) = #{errors <= e} / N``."""

    support: np.ndarray
    fractions: np.ndarray

    def __call__(self, e: float) -> float:
        n = len(self.support)
        return float(np.searchsorted(self.support, e, side="right") / n)


def empirical_cdf(errors: Sequence[float]) -> EmpiricalCdf:
    s = np.sort(np.asarray(errors, dtype=float))
    if s.size == 0:
        raise LocfuseError("empty-input", "CDF of no errors")
    n = s.size
    return EmpiricalCdf(s, np.arange(1, n + 1) / n)


def percentile(errors: Sequence[float], q: float) -> float:
    """Smallest observed error ``e`` with ``F(e) >= q``."""
    if not 0 < q <= 1:
        raise LocfuseError("bad-quantile", str(q))
    cdf = empirical_cdf(errors)
    values = np.unique(cdf.support)
    counts = np.searchsorted(cdf.support, values, side="right")
    i = int(np.argmax(counts / len(cdf.support) >= q))
    return float(values[i])


def horizontal_error(estimate: Position, truth: Position) -> float:
    return math.hypot(estimate.x - truth.x, estimate.y - truth.y)


def test_size(n: int, test_fraction: float) -> int:
    # round half up
    return int(math.floor(test_fraction * n + 0.5))


def monte_carlo_split(dataset, test_fraction: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Uniform train/test partition with ``round(test_fraction * N)`` test rows.

    ``dataset`` may be a Dataset or a sample count.  Both index arrays are
    returned sorted.
    """
    n = dataset if isinstance(dataset, (int, np.integer)) else len(dataset)
    k = test_size(n, test_fraction)
    if not 1 <= k < n:
        raise LocfuseError("dataset-too-small", f"N={n} gives a test set of {k}")
    perm = rng.permutation(n)
    return np.sort(perm[k:]), np.sort(perm[:k])


def forest_seed(master_seed: int, iteration: int, tech: Selector, method: Method) -> int:
    return derive_seed(master_seed, iteration, _TECH_KEY[tech], _METHOD_KEY[method])


# per-process state for pool workers
_SHARED: dict = {}


def _prepare_shared(dataset: Dataset, config: ExperimentConfig) -> dict:
    mats = {tech: feature_matrix(dataset, tech) for tech in config.technologies}
    return {
        "config": config,
        "features": {tech: (fm.columns, fm.rows) for tech, fm in mats.items()},
        "labels": np.array(dataset.labels(), dtype=object),
        "positions": dataset.positions(),
        "zones": dataset.zones,
        "n": len(dataset),
    }


def _init_worker(shared: dict) -> None:
    _SHARED.clear()
    _SHARED.update(shared)


def _params_with_seed(params: ForestParams, seed: int) -> ForestParams:
    return ForestParams(
        n_trees=params.n_trees,
        max_depth=params.max_depth,
        min_samples_leaf=params.min_samples_leaf,
        features_per_split=params.features_per_split,
        bootstrap=params.bootstrap,
        seed=seed,
    )


def run_iteration(i: int, shared: dict | None = None) -> dict:
    sh = _SHARED if shared is None else shared
    config: ExperimentConfig = sh["config"]
    labels, positions, zones = sh["labels"], sh["positions"], sh["zones"]
    train, test = monte_carlo_split(sh["n"], config.test_fraction, derive_rng(config.master_seed, i))
    out = {"iteration": i, "acc": {}, "errors": {}, "predictions": []}
    for tech in config.technologies:
        columns, rows = sh["features"][tech]
        Xtr, Xte = rows[train], rows[test]
        clf = fit_forest(
            Xtr,
            list(labels[train]),
            _params_with_seed(config.classify_params, forest_seed(config.master_seed, i, tech, Method.CLASSIFY)),
            columns=columns,
            kind=ForestKind.CLASSIFIER,
        )
        reg = fit_forest(
            Xtr,
            positions[train],
            _params_with_seed(config.regress_params, forest_seed(config.master_seed, i, tech, Method.REGRESS)),
            columns=columns,
            kind=ForestKind.REGRESSOR_2D,
        )
        truth = labels[test]
        cls_pred = predict_classes(clf, Xte)
        est = predict_positions(reg, Xte)
        reg_pred = zones_of(est, zones)
        out["acc"][(tech, Method.CLASSIFY)] = float(np.mean([a == b for a, b in zip(cls_pred, truth)]))
        out["acc"][(tech, Method.REGRESS)] = float(np.mean([a == b for a, b in zip(reg_pred, truth)]))
        out["errors"][tech] = np.hypot(est[:, 0] - positions[test, 0], est[:, 1] - positions[test, 1])
        if config.keep_predictions:
            for j, idx in enumerate(test):
                out["predictions"].append(
                    Prediction(i, tech, int(idx), str(truth[j]), cls_pred[j], reg_pred[j],
                               (float(est[j, 0]), float(est[j, 1])))
                )
    return out


def run_experiment(dataset: Dataset, config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Run ``config.n_iterations`` split/train/evaluate rounds.

    Iteration ``i`` splits with ``derive_rng(master_seed, i)`` and seeds every
    forest from ``(master_seed, i, technology, method)``, so the report is
    the same for any ``workers`` count.
    """
    shared = _prepare_shared(dataset, config)
    iterations = range(config.n_iterations)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(shared,)) as pool:
            results = list(pool.map(run_iteration, iterations, chunksize=max(1, config.n_iterations // (4 * workers))))
    else:
        results = [run_iteration(i, shared) for i in iterations]
    results.sort(key=lambda r: r["iteration"])

    accuracies = {
        (tech, m): np.array([r["acc"][(tech, m)] for r in results])
        for tech in config.technologies
        for m in Method
    }
    # sorted merge keeps the pooled errors independent of completion order
    errors = {tech: np.sort(np.concatenate([r["errors"][tech] for r in results])) for tech in config.technologies}
    predictions = [p for r in results for p in r["predictions"]]
    return ExperimentReport(config, accuracies, errors, predictions)
