"""Selection quality metrics and the exhaustive subset oracle.

Two benchmark metrics: (1) ordinary linear regression reconstructing all
features from the selected ones, fitted on the train split and reported as
mean squared error per entry; (2) downstream classification accuracy with
extremely randomized trees built on the selected columns. The brute-force
oracle solves the underlying subset-selection problem exactly at small
scale by enumerating every k-subset, and is the ground truth the trained
selector is checked against.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .dataio import Dataset, SplitSpec
from .model_core import ModelParams, score_vector, topk_mask

BRUTE_FORCE_MAX_SUBSETS = 10**6
DEFAULT_RIDGE_EPS = 1e-8


@dataclass(frozen=True)
class SelectionResult:
    """Sorted indices of the selected features and their scores."""

    kept_idx: tuple[int, ...]
    scores: tuple[float, ...]
    source: str = ""


def select_features(params: ModelParams, k: int) -> SelectionResult:
    """Top-k features by score; invariant to the sign of the raw weights."""
    s = score_vector(params)
    mask = topk_mask(s, k)
    kept = tuple(int(i) for i in mask.kept_idx)
    return SelectionResult(kept_idx=kept, scores=tuple(float(s[i]) for i in kept))


@dataclass(frozen=True)
class OlsModel:
    """Linear map from selected columns to all columns, with intercept."""

    b: np.ndarray  # (k, m)
    intercept: np.ndarray  # (m,)
    ridge_eps: float
    sel_idx: tuple[int, ...]


def ols_fit(
    ds: Dataset, sp: SplitSpec, sel: SelectionResult, ridge_eps: float = DEFAULT_RIDGE_EPS
) -> OlsModel:
    """Least-squares fit of all columns from the selected ones (train split).

    Normal equations with a tiny ridge keep rank-deficient selections (for
    instance duplicated columns) solvable; ridge_eps=0 gives the raw
    normal-equation solve and fails loudly on singular selections.
    """
    if len(sel.kept_idx) == 0:
        raise ValueError("empty selection")
    idx = np.array(sel.kept_idx, dtype=np.int64)
    a = ds.x[sp.train_idx][:, idx]
    y = ds.x[sp.train_idx]
    a_mean = a.mean(axis=0)
    y_mean = y.mean(axis=0)
    ac = a - a_mean
    yc = y - y_mean
    gram = ac.T @ ac + ridge_eps * np.eye(idx.size)
    b = np.linalg.solve(gram, ac.T @ yc)
    if not np.isfinite(b).all():
        raise np.linalg.LinAlgError("singular normal equations")
    intercept = y_mean - a_mean @ b
    return OlsModel(b=b, intercept=intercept, ridge_eps=ridge_eps, sel_idx=sel.kept_idx)


def ols_error(model: OlsModel, ds: Dataset, sp: SplitSpec, which: str) -> float:
    """Mean squared residual per entry on the named split."""
    idx = {"train": sp.train_idx, "val": sp.val_idx, "test": sp.test_idx}[which]
    x = ds.x[idx]
    pred = x[:, np.array(model.sel_idx, dtype=np.int64)] @ model.b + model.intercept
    diff = pred - x
    return float(np.mean(diff * diff))


# --- extremely randomized trees -------------------------------------------
#
# Per node: draw up to k_candidates non-constant features, one uniform random
# threshold each inside the feature's range at the node, keep the split with
# the largest Gini impurity decrease. No bootstrap; nodes grow until pure,
# smaller than min_split, or without any non-constant feature.


@dataclass(frozen=True)
class TreeNode:
    feature: int = -1  # -1 marks a leaf
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    histogram: np.ndarray | None = None  # class counts at a leaf


@dataclass(frozen=True)
class ExtraTreesModel:
    trees: tuple[TreeNode, ...]
    n_trees: int
    k_candidates: int
    min_split: int
    seed: int
    n_classes: int


def _gini(hist: np.ndarray) -> float:
    n = hist.sum()
    if n == 0:
        return 0.0
    p = hist / n
    return float(1.0 - np.sum(p * p))


def _grow_tree(x, y, n_classes, k_candidates, min_split, rng) -> TreeNode:
    hist = np.bincount(y, minlength=n_classes).astype(np.float64)
    n = y.size
    if n < min_split or np.count_nonzero(hist) <= 1:
        return TreeNode(histogram=hist)
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    nonconst = np.flatnonzero(hi > lo)
    if nonconst.size == 0:
        return TreeNode(histogram=hist)
    size = min(k_candidates, nonconst.size)
    feats = rng.choice(nonconst, size=size, replace=False)
    parent_gini = _gini(hist)
    best = None  # (decrease, feature, threshold, left_mask)
    for f in feats:
        # threshold in (lo, hi] so both sides are non-empty
        thr = hi[f] - (hi[f] - lo[f]) * rng.random()
        left = x[:, f] < thr
        nl = int(left.sum())
        hist_l = np.bincount(y[left], minlength=n_classes).astype(np.float64)
        hist_r = hist - hist_l
        dec = parent_gini - (nl / n) * _gini(hist_l) - ((n - nl) / n) * _gini(hist_r)
        if best is None or dec > best[0]:
            best = (dec, int(f), float(thr), left)
    _, f, thr, left = best
    return TreeNode(
        feature=f,
        threshold=thr,
        left=_grow_tree(x[left], y[left], n_classes, k_candidates, min_split, rng),
        right=_grow_tree(x[~left], y[~left], n_classes, k_candidates, min_split, rng),
    )


def extratrees_fit(
    x_sel: np.ndarray,
    labels: np.ndarray,
    n_trees: int = 50,
    seed: int = 0,
    k_candidates: int | None = None,
    min_split: int = 2,
) -> ExtraTreesModel:
    """Fit an ensemble of fully randomized trees; deterministic in seed."""
    x_sel = np.asarray(x_sel, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if x_sel.ndim != 2 or x_sel.shape[0] != labels.size:
        raise ValueError("x_sel and labels disagree on the sample count")
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("need at least 2 classes in the training data")
    n_classes = int(labels.max()) + 1
    if k_candidates is None:
        k_candidates = math.ceil(math.sqrt(x_sel.shape[1]))
    children = np.random.SeedSequence(seed).spawn(n_trees)
    trees = tuple(
        _grow_tree(
            x_sel, labels, n_classes, k_candidates, min_split, np.random.default_rng(c)
        )
        for c in children
    )
    return ExtraTreesModel(
        trees=trees,
        n_trees=n_trees,
        k_candidates=k_candidates,
        min_split=min_split,
        seed=int(seed),
        n_classes=n_classes,
    )


def _tree_predict(node: TreeNode, row: np.ndarray) -> int:
    while node.feature >= 0:
        node = node.left if row[node.feature] < node.threshold else node.right
    return int(np.argmax(node.histogram))  # ties go to the lower class id


def extratrees_predict(model: ExtraTreesModel, x_sel: np.ndarray) -> np.ndarray:
    """Majority vote over the ensemble (ties to the lower class id)."""
    x_sel = np.asarray(x_sel, dtype=np.float64)
    preds = np.empty(x_sel.shape[0], dtype=np.int64)
    for i, row in enumerate(x_sel):
        votes = np.zeros(model.n_classes, dtype=np.int64)
        for tree in model.trees:
            votes[_tree_predict(tree, row)] += 1
        preds[i] = int(np.argmax(votes))
    return preds


def extratrees_accuracy(model: ExtraTreesModel, x_sel: np.ndarray, labels: np.ndarray) -> float:
    labels = np.asarray(labels, dtype=np.int64)
    return float(np.mean(extratrees_predict(model, x_sel) == labels))


def brute_force_best_subset(
    ds: Dataset, sp: SplitSpec, k: int, ridge_eps: float = DEFAULT_RIDGE_EPS
) -> tuple[tuple[int, ...], float]:
    """Exhaustive minimizer of the train-fit / test-eval OLS reconstruction.

    Enumerates every k-subset (guarded to one million), so it is the exact,
    if slow, solution of the subset-selection problem at toy scale. Ties
    resolve to the lexicographically first subset.
    """
    m = ds.n_features
    if not 1 <= k <= m:
        raise ValueError(f"k={k} out of range [1, {m}]")
    n_subsets = math.comb(m, k)
    if n_subsets > BRUTE_FORCE_MAX_SUBSETS:
        raise ValueError(
            f"C({m},{k})={n_subsets} subsets exceeds the {BRUTE_FORCE_MAX_SUBSETS} guard"
        )
    best_idx: tuple[int, ...] | None = None
    best_err = np.inf
    for combo in itertools.combinations(range(m), k):
        sel = SelectionResult(kept_idx=combo, scores=(0.0,) * k)
        model = ols_fit(ds, sp, sel, ridge_eps)
        err = ols_error(model, ds, sp, "test")
        if err < best_err:
            best_err = err
            best_idx = combo
    return best_idx, float(best_err)
