"""Random forest built from bootstrapped CART trees.

Classification forests vote (ties go to the lexicographically smallest
label); 2D regression forests average the leaf mean positions of their trees.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .model import LocfuseError, Position
from .seeding import derive_rng

FOREST_MAGIC = "locfuse-forest"
FOREST_VERSION = "v1"


class ForestKind(enum.Enum):
    CLASSIFIER = "classifier"
    REGRESSOR_2D = "regressor2d"


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 2
    features_per_split: int | None = None  # None: ceil(sqrt(p)) classify, ceil(p/3) regress
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise LocfuseError("bad-forest-params", "n_trees must be >= 1")
        if self.min_samples_leaf < 1:
            raise LocfuseError("bad-forest-params", "min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise LocfuseError("bad-forest-params", "max_depth must be >= 0")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise LocfuseError("bad-forest-params", "features_per_split must be >= 1")
        if self.seed < 0:
            raise LocfuseError("bad-forest-params", "seed must be >= 0")

    def resolve_features(self, kind: ForestKind, p: int) -> int:
        if self.features_per_split is None:
            m = math.ceil(math.sqrt(p)) if kind is ForestKind.CLASSIFIER else math.ceil(p / 3)
        else:
            m = self.features_per_split
        if not 1 <= m <= p:
            raise LocfuseError("bad-forest-params", f"features_per_split={m} outside [1, {p}]")
        return m


@dataclass(frozen=True, eq=False)
class Tree:
    """One fitted tree as pre-order node arrays (``feature == -1`` marks leaves)."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        def walk(k):
            if self.feature[k] < 0:
                return 0
            return 1 + max(walk(self.left[k]), walk(self.right[k]))

        return walk(0)

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in ("feature", "threshold", "left", "right", "value")
        )


@dataclass(frozen=True)
class Forest:
    kind: ForestKind
    trees: tuple[Tree, ...]
    columns: tuple[str, ...]
    labels: tuple[str, ...] = ()
    _packed: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "labels", tuple(self.labels))
        offsets = np.cumsum([0] + [t.n_nodes for t in self.trees[:-1]]).astype(np.int64)
        packed = tuple(
            np.ascontiguousarray(np.concatenate([getattr(t, name) + (off if name in ("left", "right") else 0)
                                                 for t, off in zip(self.trees, offsets)]))
            for name in ("feature", "threshold", "left", "right")
        )
        value = np.ascontiguousarray(np.concatenate([t.value for t in self.trees]))
        # leaves keep -1 children; the offset must not turn them into indices
        left = np.where(packed[0] >= 0, packed[2], -1)
        right = np.where(packed[0] >= 0, packed[3], -1)
        object.__setattr__(self, "_packed", (packed[0], packed[1], left, right, value, offsets))

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def leaf_payloads(self, X) -> np.ndarray:
        X = self._check(X)
        feature, threshold, left, right, value, roots = self._packed
        return _kernels.leaf_values(feature, threshold, left, right, value, roots, X)

    def _check(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.columns):
            raise LocfuseError("width-mismatch", f"expected {len(self.columns)} features, got {X.shape[1]}")
        return np.ascontiguousarray(X)


def gini(labels: Sequence) -> float:
    n = len(labels)
    if n == 0:
        raise LocfuseError("empty-input", "gini of an empty multiset")
    counts: dict = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    return 1.0 - sum((c / n) ** 2 for c in counts.values())


def variance_impurity(targets) -> float:
    """Var(x) + Var(y) with divisor N."""
    t = np.asarray(targets, dtype=float).reshape(-1, 2)
    if len(t) == 0:
        raise LocfuseError("empty-input", "variance of an empty target list")
    return float(((t - t.mean(axis=0)) ** 2).sum() / len(t))


def _encode(y, kind: ForestKind):
    if kind is ForestKind.CLASSIFIER:
        labels = tuple(sorted(set(map(str, y))))
        lookup = {lab: i for i, lab in enumerate(labels)}
        codes = np.array([lookup[str(v)] for v in y], dtype=np.int64)
        return labels, codes, np.zeros((len(codes), 2))
    targets = np.ascontiguousarray(np.asarray(y, dtype=np.float64).reshape(-1, 2))
    return (), np.zeros(len(targets), dtype=np.int64), targets


def _infer_kind(y) -> ForestKind:
    first = y[0]
    if isinstance(first, str):
        return ForestKind.CLASSIFIER
    return ForestKind.REGRESSOR_2D


def _prepare(X, y, kind):
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
    if X.shape[0] == 0 or len(y) == 0:
        raise LocfuseError("empty-training-set")
    if X.shape[0] != len(y):
        raise LocfuseError("width-mismatch", f"{X.shape[0]} rows but {len(y)} targets")
    if kind is None:
        kind = _infer_kind(y)
    return X, kind


def _grow(X, codes, targets, kind, n_classes, rows, rng, params: ForestParams) -> Tree:
    n, p = X.shape
    m = params.resolve_features(kind, p)
    keys = rng.random((2 * len(rows), p)) if m < p else np.zeros((1, p))
    arrays = _kernels.fit_tree(
        X,
        codes,
        targets,
        kind is ForestKind.CLASSIFIER,
        n_classes,
        np.asarray(rows, dtype=np.int64),
        keys,
        m,
        -1 if params.max_depth is None else params.max_depth,
        params.min_samples_leaf,
    )
    return Tree(*arrays)


def fit_tree(X, y, params: ForestParams, rng: np.random.Generator, kind: ForestKind | None = None) -> Tree:
    """Grow one CART tree on all rows of ``X``.

    ``y`` holds string labels (classifier) or ``(x, y)`` positions
    (regressor); the kind is inferred from ``y`` unless given.
    """
    X, kind = _prepare(X, y, kind)
    labels, codes, targets = _encode(y, kind)
    return _grow(X, codes, targets, kind, max(1, len(labels)), np.arange(len(X)), rng, params)


def _fit_one(args):
    X, codes, targets, kind, n_classes, params, t = args
    rng = derive_rng(params.seed, t)
    n = len(X)
    rows = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
    return _grow(X, codes, targets, kind, n_classes, rows, rng, params)


def fit_forest(
    X,
    y,
    params: ForestParams,
    columns: Sequence[str] | None = None,
    kind: ForestKind | None = None,
    executor: Executor | None = None,
) -> Forest:
    """Fit ``params.n_trees`` trees; tree ``t`` draws from ``derive_rng(seed, t)``.

    Trees may be grown on an ``executor``; the result is identical to the
    serial fit because each tree owns its random stream.
    """
    X, kind = _prepare(X, y, kind)
    labels, codes, targets = _encode(y, kind)
    if columns is None:
        columns = tuple(f"f{j}" for j in range(X.shape[1]))
    if len(columns) != X.shape[1]:
        raise LocfuseError("width-mismatch", f"{len(columns)} column names for {X.shape[1]} features")
    n_classes = max(1, len(labels))
    jobs = [(X, codes, targets, kind, n_classes, params, t) for t in range(params.n_trees)]
    trees = list(executor.map(_fit_one, jobs)) if executor is not None else [_fit_one(j) for j in jobs]
    return Forest(kind, tuple(trees), tuple(columns), labels)


def _require(forest: Forest, kind: ForestKind):
    if forest.kind is not kind:
        raise LocfuseError("wrong-forest-kind", f"expected {kind.value}, got {forest.kind.value}")


def predict_classes(forest: Forest, X) -> list[str]:
    _require(forest, ForestKind.CLASSIFIER)
    codes = forest.leaf_payloads(X)[:, :, 0].astype(np.int64)
    votes = (codes[:, :, None] == np.arange(len(forest.labels))).sum(axis=1)
    # argmax returns the first maximum; labels are sorted, so ties go lexicographically
    return [forest.labels[i] for i in votes.argmax(axis=1)]


def predict_class(forest: Forest, x) -> str:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise LocfuseError("width-mismatch", "expected a single feature vector")
    return predict_classes(forest, x[None, :])[0]


def predict_positions(forest: Forest, X) -> np.ndarray:
    _require(forest, ForestKind.REGRESSOR_2D)
    leaves = forest.leaf_payloads(X)
    mean = leaves.mean(axis=1)
    # the mean of the tree outputs is bounded by them; clip away rounding excursions
    return np.clip(mean, leaves.min(axis=1), leaves.max(axis=1))


def predict_position(forest: Forest, x) -> Position:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise LocfuseError("width-mismatch", "expected a single feature vector")
    px, py = predict_positions(forest, x[None, :])[0]
    return Position(float(px), float(py), 0.0)


# -- serialization ---------------------------------------------------------
#
#   locfuse-forest v1 <kind> <n_trees> <columns...>
#   K <labels...>                  (classifier only)
#   I <feature> <threshold>        internal node, pre-order
#   L <label> | L <x> <y>          leaf
#
# Floats are written with repr(), which round-trips exactly.


def dumps_forest(forest: Forest) -> str:
    lines = [" ".join([FOREST_MAGIC, FOREST_VERSION, forest.kind.value, str(forest.n_trees), *forest.columns])]
    if forest.kind is ForestKind.CLASSIFIER:
        lines.append(" ".join(["K", *forest.labels]))
    for tree in forest.trees:
        for k in range(tree.n_nodes):
            f = int(tree.feature[k])
            if f >= 0:
                lines.append(f"I {f} {float(tree.threshold[k])!r}")
            elif forest.kind is ForestKind.CLASSIFIER:
                lines.append(f"L {forest.labels[int(tree.value[k, 0])]}")
            else:
                lines.append(f"L {float(tree.value[k, 0])!r} {float(tree.value[k, 1])!r}")
    return "\n".join(lines) + "\n"


def _parse_tree(lines, pos, kind, label_index, lineno_base):
    feature, threshold, left, right, value = [], [], [], [], []

    def node(pos):
        if pos >= len(lines):
            raise LocfuseError("bad-forest-file", "truncated tree")
        parts = lines[pos].split()
        k = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append((0.0, 0.0))
        try:
            if parts[0] == "I" and len(parts) == 3:
                feature[k] = int(parts[1])
                threshold[k] = float(parts[2])
                left[k] = len(feature)
                pos = node(pos + 1)
                right[k] = len(feature)
                return node(pos)
            if parts[0] == "L":
                if kind is ForestKind.CLASSIFIER and len(parts) == 2:
                    value[k] = (float(label_index[parts[1]]), 0.0)
                elif kind is ForestKind.REGRESSOR_2D and len(parts) == 3:
                    value[k] = (float(parts[1]), float(parts[2]))
                else:
                    raise ValueError(lines[pos])
                return pos + 1
        except (ValueError, KeyError) as exc:
            raise LocfuseError("bad-forest-file", f"line {lineno_base + pos + 1}: {exc}") from None
        raise LocfuseError("bad-forest-file", f"line {lineno_base + pos + 1}: unexpected {lines[pos]!r}")

    end = node(pos)
    tree = Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64).reshape(-1, 2),
    )
    return tree, end


def loads_forest(text: str) -> tuple[Forest, list[str]]:
    """Parse a forest; returns the forest and any trailing lines after the last tree."""
    lines = text.splitlines()
    if not lines:
        raise LocfuseError("bad-forest-file", "empty")
    head = lines[0].split()
    if len(head) < 4 or head[0] != FOREST_MAGIC:
        raise LocfuseError("bad-forest-file", "line 1: missing forest header")
    if head[1] != FOREST_VERSION:
        raise LocfuseError("bad-forest-file", f"line 1: unsupported version {head[1]}")
    try:
        kind = ForestKind(head[2])
        n_trees = int(head[3])
    except ValueError as exc:
        raise LocfuseError("bad-forest-file", f"line 1: {exc}") from None
    columns = tuple(head[4:])
    pos = 1
    labels: tuple[str, ...] = ()
    if kind is ForestKind.CLASSIFIER:
        if pos >= len(lines) or not lines[pos].startswith("K"):
            raise LocfuseError("bad-forest-file", "line 2: missing label line")
        labels = tuple(lines[pos].split()[1:])
        pos += 1
    label_index = {lab: i for i, lab in enumerate(labels)}
    trees = []
    for _ in range(n_trees):
        tree, pos = _parse_tree(lines, pos, kind, label_index, 0)
        trees.append(tree)
    return Forest(kind, tuple(trees), columns, labels), lines[pos:]
