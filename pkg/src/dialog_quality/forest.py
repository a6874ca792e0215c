"""Bagged decision-tree ensemble for binary defect classification.

Plain CART: greedy axis-aligned splits chosen by weighted Gini impurity over
a random feature subset per node, midpoint thresholds between consecutive
distinct values, bootstrap resampling per tree. The predicted probability is
the mean over trees of the leaf defect fraction.

Per-tree RNG streams are derived only from (rng_seed, tree_index), so growing
the ensemble keeps earlier trees identical and parallel training would
reproduce serial results.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dialogs import Dialog
from .features import FeatureConfig, FeaturePipeline, tfidf_from_dict, tfidf_to_dict
from .metrics import classification_report
from .tld import TldScoreMap


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = 16
    min_samples_leaf: int = 1
    features_per_split: int | None = None  # None resolves to ceil(sqrt(dim))
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1 or None")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be >= 0")

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "features_per_split": self.features_per_split,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ForestParams":
        return cls(
            n_trees=obj["n_trees"],
            max_depth=obj["max_depth"],
            min_samples_leaf=obj["min_samples_leaf"],
            features_per_split=obj["features_per_split"],
            rng_seed=obj["rng_seed"],
        )


@dataclass
class TreeNode:
    """Internal node (feature_index/threshold/left/right) or leaf (fraction/count).

    Internal nodes route x left iff x[feature_index] <= threshold.
    """

    feature_index: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    defect_fraction: float | None = None
    sample_count: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class Forest:
    trees: list[TreeNode]
    params: ForestParams
    feature_dimension: int


def best_threshold(
    col: np.ndarray, y: np.ndarray, min_samples_leaf: int = 1
) -> tuple[float, float] | None:
    """Best split of one feature column: (midpoint threshold, weighted Gini).

    Candidates are midpoints between consecutive distinct sorted values;
    splits leaving fewer than min_samples_leaf rows on either side are
    rejected. Returns None when no valid candidate exists.
    """
    n = col.shape[0]
    order = np.argsort(col, kind="mergesort")
    vals = col[order]
    labels = y[order].astype(np.int64)
    boundaries = np.nonzero(vals[:-1] < vals[1:])[0]
    if boundaries.size == 0:
        return None
    left_n = boundaries + 1
    right_n = n - left_n
    valid = (left_n >= min_samples_leaf) & (right_n >= min_samples_leaf)
    if not valid.any():
        return None
    cum_pos = np.cumsum(labels)
    left_pos = cum_pos[boundaries]
    right_pos = cum_pos[-1] - left_pos
    p_left = left_pos / left_n
    p_right = right_pos / right_n
    gini_left = 1.0 - p_left**2 - (1.0 - p_left) ** 2
    gini_right = 1.0 - p_right**2 - (1.0 - p_right) ** 2
    weighted = (left_n * gini_left + right_n * gini_right) / n
    weighted = np.where(valid, weighted, np.inf)
    k = int(np.argmin(weighted))
    threshold = float((vals[boundaries[k]] + vals[boundaries[k] + 1]) / 2.0)
    return threshold, float(weighted[k])


def _leaf(y: np.ndarray) -> TreeNode:
    n = int(y.size)
    return TreeNode(defect_fraction=float(y.sum()) / n, sample_count=n)


def _build(
    X: np.ndarray,
    y: np.ndarray,
    params: ForestParams,
    m: int,
    rng: np.random.Generator,
    depth: int,
) -> TreeNode:
    n = y.size
    pos = int(y.sum())
    if (
        pos == 0
        or pos == n
        or n < 2 * params.min_samples_leaf
        or (params.max_depth is not None and depth >= params.max_depth)
    ):
        return _leaf(y)
    candidates = rng.choice(X.shape[1], size=m, replace=False)
    best: tuple[float, int, float] | None = None
    for f in candidates:
        found = best_threshold(X[:, f], y, params.min_samples_leaf)
        if found is None:
            continue
        threshold, gini = found
        if best is None or gini < best[0]:
            best = (gini, int(f), threshold)
    if best is None:
        return _leaf(y)
    _, feature, threshold = best
    mask = X[:, feature] <= threshold
    return TreeNode(
        feature_index=feature,
        threshold=threshold,
        left=_build(X[mask], y[mask], params, m, rng, depth + 1),
        right=_build(X[~mask], y[~mask], params, m, rng, depth + 1),
    )


def _resolve_m(params: ForestParams, dim: int) -> int:
    if params.features_per_split is None:
        return int(np.ceil(np.sqrt(dim)))
    if params.features_per_split > dim:
        raise ValueError(
            f"features_per_split {params.features_per_split} exceeds dimension {dim}"
        )
    return params.features_per_split


def train_tree(
    X: np.ndarray, y: np.ndarray, params: ForestParams, rng: np.random.Generator
) -> TreeNode:
    """Grow one CART tree on (X, y); deterministic given the rng state."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=bool)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, dim) and y (n,) with matching n")
    if y.size < 1:
        raise ValueError("need at least one row")
    return _build(X, y, params, _resolve_m(params, X.shape[1]), rng, depth=0)


def _tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, tree_index])


def train_forest(X: np.ndarray, y: np.ndarray, params: ForestParams) -> Forest:
    """Train n_trees trees, each on its own bootstrap resample."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=bool)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, dim) and y (n,) with matching n")
    n = y.size
    if n < 2 or y.all() or not y.any():
        raise ValueError("training data must contain both classes")
    trees = []
    for t in range(params.n_trees):
        rng = _tree_rng(params.rng_seed, t)
        idx = rng.integers(0, n, size=n)
        trees.append(train_tree(X[idx], y[idx], params, rng))
    return Forest(trees=trees, params=params, feature_dimension=X.shape[1])


def _tree_fraction(node: TreeNode, x: np.ndarray) -> float:
    while not node.is_leaf:
        node = node.left if x[node.feature_index] <= node.threshold else node.right
    return node.defect_fraction


def predict_proba(forest: Forest, x: np.ndarray) -> float | np.ndarray:
    """Mean over trees of the reached leaf's defect fraction.

    Accepts a single vector (returns float) or a matrix (returns an array).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if x.shape[0] != forest.feature_dimension:
            raise ValueError(
                f"dimension mismatch: expected {forest.feature_dimension}, "
                f"got {x.shape[0]}"
            )
        return float(
            sum(_tree_fraction(t, x) for t in forest.trees) / len(forest.trees)
        )
    if x.ndim == 2:
        return np.array([predict_proba(forest, row) for row in x])
    raise ValueError("x must be a vector or a matrix")


def stratified_folds(y: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Deterministic stratified k-fold assignment; class counts per fold differ
    by at most one sample."""
    y = np.asarray(y, dtype=bool)
    pos = np.flatnonzero(y)
    neg = np.flatnonzero(~y)
    if pos.size < k or neg.size < k:
        raise ValueError(
            f"need at least {k} rows of each class for {k}-fold stratification"
        )
    rng = np.random.default_rng([seed, 0x5F01D])
    pos = pos.copy()
    neg = neg.copy()
    rng.shuffle(pos)
    rng.shuffle(neg)
    folds: list[list[int]] = [[] for _ in range(k)]
    for i, idx in enumerate(pos):
        folds[i % k].append(int(idx))
    start = pos.size % k
    for j, idx in enumerate(neg):
        folds[(start + j) % k].append(int(idx))
    return [np.array(sorted(f)) for f in folds]


def cross_validate(
    X: np.ndarray,
    y: np.ndarray,
    param_grid: list[ForestParams],
    k: int = 5,
    seed: int = 0,
) -> tuple[ForestParams, list[tuple[ForestParams, float]]]:
    """Stratified k-fold search maximizing mean F1 of the defect class.

    Returns the winning grid point (ties broken by grid order) and the mean
    F1 for every grid point.
    """
    if not param_grid:
        raise ValueError("param_grid must not be empty")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=bool)
    folds = stratified_folds(y, k, seed)
    for f, fold in enumerate(folds):
        fold_y = y[fold]
        if fold_y.all() or not fold_y.any():
            raise ValueError(f"fold {f} contains a single class")
    all_idx = np.arange(y.size)
    results: list[tuple[ForestParams, float]] = []
    best_i = -1
    best_f1 = -1.0
    for i, params in enumerate(param_grid):
        f1s = []
        for fold in folds:
            train_mask = np.ones(y.size, dtype=bool)
            train_mask[fold] = False
            train_idx = all_idx[train_mask]
            model = train_forest(X[train_idx], y[train_idx], params)
            proba = predict_proba(model, X[fold])
            predicted = [bool(p >= 0.5) for p in np.atleast_1d(proba)]
            f1s.append(classification_report(predicted, list(y[fold])).f1)
        mean_f1 = sum(f1s) / len(f1s)
        results.append((params, mean_f1))
        if mean_f1 > best_f1:
            best_f1 = mean_f1
            best_i = i
    return results[best_i][0], results


def tree_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {
            "leaf": True,
            "defect_fraction": node.defect_fraction,
            "sample_count": node.sample_count,
        }
    return {
        "leaf": False,
        "feature_index": node.feature_index,
        "threshold": node.threshold,
        "left": tree_to_dict(node.left),
        "right": tree_to_dict(node.right),
    }


def tree_from_dict(obj: dict) -> TreeNode:
    if obj["leaf"]:
        return TreeNode(
            defect_fraction=obj["defect_fraction"],
            sample_count=obj["sample_count"],
        )
    return TreeNode(
        feature_index=obj["feature_index"],
        threshold=obj["threshold"],
        left=tree_from_dict(obj["left"]),
        right=tree_from_dict(obj["right"]),
    )


def forest_to_dict(forest: Forest) -> dict:
    return {
        "params": forest.params.to_dict(),
        "feature_dimension": forest.feature_dimension,
        "trees": [tree_to_dict(t) for t in forest.trees],
    }


def forest_from_dict(obj: dict) -> Forest:
    return Forest(
        trees=[tree_from_dict(t) for t in obj["trees"]],
        params=ForestParams.from_dict(obj["params"]),
        feature_dimension=obj["feature_dimension"],
    )


@dataclass
class ModelBundle:
    """A trained classifier with the feature pipeline that feeds it."""

    forest: Forest
    pipeline: FeaturePipeline
    manifest: dict

    def predict_proba(self, dialogs: list[Dialog], scores: TldScoreMap) -> np.ndarray:
        X = self.pipeline.transform_all(dialogs, scores)
        return np.atleast_1d(predict_proba(self.forest, X))


def _fingerprint(X: np.ndarray, y: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(X, dtype=float).tobytes())
    h.update(np.ascontiguousarray(y, dtype=bool).tobytes())
    return h.hexdigest()


def fit_bundle(
    dialogs: list[Dialog],
    labels: list[bool],
    scores: TldScoreMap,
    feature_config: FeatureConfig,
    params: ForestParams,
) -> ModelBundle:
    """Fit the feature pipeline on ``dialogs`` and train the forest on top."""
    pipeline = FeaturePipeline.fit(dialogs, feature_config)
    X = pipeline.transform_all(dialogs, scores)
    y = np.array(labels, dtype=bool)
    forest = train_forest(X, y, params)
    manifest = {
        "schema": "model-bundle v1",
        "feature_dimension": forest.feature_dimension,
        "n_training_dialogs": len(dialogs),
        "n_defect": int(y.sum()),
        "n_non_defect": int((~y).sum()),
        "training_fingerprint": _fingerprint(X, y),
        "params": params.to_dict(),
        "feature_config": feature_config.to_dict(),
    }
    return ModelBundle(forest=forest, pipeline=pipeline, manifest=manifest)


def save_bundle(directory: str | Path, bundle: ModelBundle) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {
        "forest.json": forest_to_dict(bundle.forest),
        "tfidf.json": tfidf_to_dict(bundle.pipeline.tfidf),
        "feature_config.json": bundle.pipeline.config.to_dict(),
        "params.json": bundle.forest.params.to_dict(),
        "manifest.json": bundle.manifest,
    }
    for name, obj in files.items():
        with open(directory / name, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, sort_keys=True, indent=2)
            fh.write("\n")


def load_bundle(directory: str | Path) -> ModelBundle:
    directory = Path(directory)
    with open(directory / "forest.json", encoding="utf-8") as fh:
        forest = forest_from_dict(json.load(fh))
    with open(directory / "tfidf.json", encoding="utf-8") as fh:
        tfidf = tfidf_from_dict(json.load(fh))
    with open(directory / "feature_config.json", encoding="utf-8") as fh:
        config = FeatureConfig.from_dict(json.load(fh))
    with open(directory / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    return ModelBundle(
        forest=forest,
        pipeline=FeaturePipeline(config, tfidf),
        manifest=manifest,
    )


DEFAULT_GRID: list[ForestParams] = [
    ForestParams(n_trees=t, max_depth=d, min_samples_leaf=m)
    for t in (100, 300)
    for d in (8, 16, None)
    for m in (1, 5)
]
