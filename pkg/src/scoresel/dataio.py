"""Dataset loading, splitting, standardization and subsampling.

Everything here is deterministic given (inputs, seed). Random index draws
use NumPy's default PCG64 generator (``np.random.default_rng``), which is
the portable PRNG pinned for this project: re-running any operation with
the same seed reproduces identical index lists bit for bit.

Labels, when present, are only carried along for the downstream classifier;
no selection code ever reads them.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace

import numpy as np

# columns whose train-split stddev falls below this are treated as constant
# (centered but not rescaled); guards against float noise in exact-constant
# columns whose mean is not exactly representable
CONSTANT_COLUMN_TOL = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Row-major sample matrix with optional names, labels and scaling state.

    Treated as immutable after construction; operations return new Datasets.
    """

    x: np.ndarray  # (n_total, m) float64, all finite
    feature_names: tuple[str, ...] | None = None
    labels: np.ndarray | None = None  # (n_total,) int codes in [0, n_classes)
    standardization: tuple[np.ndarray, np.ndarray] | None = None  # (mean, scale)

    @property
    def n_total(self) -> int:
        return self.x.shape[0]

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    @property
    def n_classes(self) -> int:
        if self.labels is None:
            return 0
        return int(self.labels.max()) + 1 if self.labels.size else 0


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint train/val/test row indices drawn from a seeded permutation."""

    ratios: tuple[float, float, float]
    seed: int
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray


def load_csv(path, has_header: bool = True, label_column: str | None = None) -> Dataset:
    """Load a numeric CSV; an optional named column becomes integer labels.

    Label values are re-coded to contiguous ids 0..C-1 in sorted order of
    the raw strings. Any non-numeric or non-finite feature cell is an error
    naming its row and column.
    """
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    rows = [r for r in rows if r]  # drop fully blank lines
    if not rows:
        raise ValueError(f"{path}: empty file")
    if has_header:
        header = [h.strip() for h in rows[0]]
        body = rows[1:]
    else:
        header = [f"f{i}" for i in range(len(rows[0]))]
        body = rows
    if not body:
        raise ValueError(f"{path}: no data rows")
    arity = len(header)
    label_pos = None
    if label_column is not None:
        if label_column not in header:
            raise ValueError(f"{path}: label column {label_column!r} not in header")
        label_pos = header.index(label_column)

    feat_names = [h for i, h in enumerate(header) if i != label_pos]
    x_rows: list[list[float]] = []
    raw_labels: list[str] = []
    for r, row in enumerate(body):
        if len(row) != arity:
            raise ValueError(
                f"{path}: row {r + 1} has {len(row)} fields, expected {arity}"
            )
        vals = []
        for c, cell in enumerate(row):
            if c == label_pos:
                raw_labels.append(cell.strip())
                continue
            try:
                v = float(cell)
            except ValueError:
                raise ValueError(
                    f"{path}: row {r + 1}, column {header[c]!r}: "
                    f"cannot parse {cell.strip()!r} as a number"
                ) from None
            if not math.isfinite(v):
                raise ValueError(
                    f"{path}: row {r + 1}, column {header[c]!r}: non-finite value"
                )
            vals.append(v)
        x_rows.append(vals)

    x = np.array(x_rows, dtype=np.float64)
    labels = None
    if label_pos is not None:
        codes = {v: i for i, v in enumerate(sorted(set(raw_labels)))}
        labels = np.array([codes[v] for v in raw_labels], dtype=np.int64)
    return Dataset(
        x=x,
        feature_names=tuple(feat_names),
        labels=labels,
    )


def split(ds: Dataset, ratios, seed: int) -> SplitSpec:
    """Seeded random train/val/test partition with floor-size allocation.

    Each split gets floor(n * ratio) rows; leftover rows go to train.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ValueError("ratios must be three non-negative reals")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios sum to {sum(ratios)}, expected 1")
    n = ds.n_total
    if n < 3:
        raise ValueError(f"need at least 3 rows to split, got {n}")
    n_tr = int(math.floor(n * ratios[0]))
    n_va = int(math.floor(n * ratios[1]))
    n_te = int(math.floor(n * ratios[2]))
    n_tr += n - (n_tr + n_va + n_te)
    for name, size, ratio in (("train", n_tr, ratios[0]), ("val", n_va, ratios[1]), ("test", n_te, ratios[2])):
        if ratio > 0 and size == 0:
            raise ValueError(f"{name} split empty for n={n}, ratio={ratio}")
    perm = np.random.default_rng(seed).permutation(n)
    return SplitSpec(
        ratios=ratios,
        seed=int(seed),
        train_idx=perm[:n_tr],
        val_idx=perm[n_tr : n_tr + n_va],
        test_idx=perm[n_tr + n_va :],
    )


def standardize(ds: Dataset, sp: SplitSpec) -> Dataset:
    """Center/scale every column by its train-split mean and stddev.

    Constant train columns are centered only (scale 1). The fitted
    (mean, scale) pairs are stored on the returned Dataset.
    """
    if sp.train_idx.size == 0:
        raise ValueError("train split is empty")
    x_tr = ds.x[sp.train_idx]
    mean = x_tr.mean(axis=0)
    std = x_tr.std(axis=0)
    scale = np.where(std > CONSTANT_COLUMN_TOL * np.maximum(1.0, np.abs(mean)), std, 1.0)
    x_new = (ds.x - mean) / scale
    return replace(ds, x=x_new, standardization=(mean, scale))


def apply_standardization(x: np.ndarray, standardization) -> np.ndarray:
    """Apply stored (mean, scale) pairs to a raw matrix."""
    mean, scale = standardization
    return (x - mean) / scale


def subsample(ds: Dataset, sp: SplitSpec, n: int, seed: int) -> SplitSpec:
    """Shrink the train split to a seeded size-n subset; nested across n.

    The subset is a prefix of one seeded permutation of train_idx, so for a
    fixed seed the n1-subset contains the n2-subset whenever n1 >= n2.
    """
    n_train = sp.train_idx.size
    if not 1 <= n <= n_train:
        raise ValueError(f"n={n} out of range [1, {n_train}]")
    perm = np.random.default_rng(seed).permutation(n_train)
    return replace(sp, train_idx=sp.train_idx[perm[:n]])


def save_split(sp: SplitSpec, path) -> None:
    """Write the split as JSON {"seed":..., "train":[...], "val":[...], "test":[...]}."""
    payload = {
        "seed": sp.seed,
        "train": sp.train_idx.tolist(),
        "val": sp.val_idx.tolist(),
        "test": sp.test_idx.tolist(),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True)


def load_split(path) -> SplitSpec:
    """Read a split JSON back; ratios are recomputed from the list sizes."""
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    train = np.array(payload["train"], dtype=np.int64)
    val = np.array(payload["val"], dtype=np.int64)
    test = np.array(payload["test"], dtype=np.int64)
    n = train.size + val.size + test.size
    return SplitSpec(
        ratios=(train.size / n, val.size / n, test.size / n),
        seed=int(payload["seed"]),
        train_idx=train,
        val_idx=val,
        test_idx=test,
    )
