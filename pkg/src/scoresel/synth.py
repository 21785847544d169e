"""Synthetic planted-feature benchmark generator.

A known subset of columns (the planted features) is drawn i.i.d. standard
normal; every remaining column is a linear mixture of ALL planted columns
plus independent noise, with the mixture amplitude tied to the noise level
(signal variance = signal_ratio * noise^2). Two properties follow:

* the planted subset is the unique minimizer of the reconstruct-everything
  objective, with a first-order margin: dropping a planted feature leaves a
  unit-variance column unexplained, while any dependent column is explained
  by the planted set up to its own noise floor;
* dependent columns are noise-dominated, so they carry little usable
  signal of their own and the margin survives standardization.

Labels are quantile bins of a fixed linear functional of the planted
features, so the dataset also exercises the downstream classifier.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataio import Dataset

# mixture weights per dependent column before normalization; near-equal
# magnitudes keep every planted feature essential
COEF_LOW = 0.8
COEF_HIGH = 1.2

# dependent-column signal variance as a multiple of the noise variance;
# 1.5 keeps the planted subset optimal with a wide margin while leaving
# dependent columns noise-dominated
DEFAULT_SIGNAL_RATIO = 1.5


@dataclass(frozen=True)
class PlantedMeta:
    """Generation record: which columns are planted and with what settings."""

    m: int
    n: int
    n_informative: int
    noise: float
    seed: int
    n_classes: int
    signal_ratio: float
    planted_idx: tuple[int, ...]


def gen_planted(
    n: int,
    m: int,
    n_informative: int,
    noise: float,
    seed: int,
    n_classes: int = 2,
    signal_ratio: float = DEFAULT_SIGNAL_RATIO,
) -> tuple[Dataset, PlantedMeta]:
    """Sample a planted-feature dataset; deterministic in seed."""
    if not 1 <= n_informative < m:
        raise ValueError(f"need 1 <= n_informative < m, got {n_informative}, {m}")
    if noise < 0:
        raise ValueError("noise must be non-negative")
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    rng = np.random.default_rng(seed)
    p = m - n_informative
    z = rng.standard_normal((n, n_informative))
    signs = rng.choice([-1.0, 1.0], size=(n_informative, p))
    raw = signs * rng.uniform(COEF_LOW, COEF_HIGH, size=(n_informative, p))
    raw /= np.sqrt((raw**2).sum(axis=0, keepdims=True))
    coef = raw * np.sqrt(signal_ratio) * noise
    x_dep = z @ coef + noise * rng.standard_normal((n, p))

    col_order = rng.permutation(m)
    planted = np.sort(col_order[:n_informative])
    x = np.empty((n, m), dtype=np.float64)
    x[:, planted] = z
    x[:, np.sort(col_order[n_informative:])] = x_dep

    u = rng.standard_normal(n_informative)
    score = z @ u
    edges = np.quantile(score, np.linspace(0, 1, n_classes + 1)[1:-1])
    labels = np.searchsorted(edges, score, side="right").astype(np.int64)

    ds = Dataset(
        x=x,
        feature_names=tuple(f"f{i}" for i in range(m)),
        labels=labels,
    )
    meta = PlantedMeta(
        m=m,
        n=n,
        n_informative=n_informative,
        noise=float(noise),
        seed=int(seed),
        n_classes=n_classes,
        signal_ratio=float(signal_ratio),
        planted_idx=tuple(int(i) for i in planted),
    )
    return ds, meta


def write_planted_csv(ds: Dataset, meta: PlantedMeta, data_path, meta_path) -> None:
    """Write the dataset as a header CSV with a label column plus a meta JSON."""
    names = list(ds.feature_names or (f"f{i}" for i in range(ds.n_features)))
    with open(data_path, "w", encoding="utf-8") as f:
        f.write(",".join(names + ["label"]) + "\n")
        for i in range(ds.n_total):
            cells = [repr(float(v)) for v in ds.x[i]]
            cells.append(str(int(ds.labels[i])))
            f.write(",".join(cells) + "\n")
    with open(meta_path, "w", encoding="utf-8") as f:
        json.dump(
            {
                "m": meta.m,
                "n": meta.n,
                "n_informative": meta.n_informative,
                "noise": meta.noise,
                "seed": meta.seed,
                "n_classes": meta.n_classes,
                "signal_ratio": meta.signal_ratio,
                "planted_idx": list(meta.planted_idx),
            },
            f,
            sort_keys=True,
        )
