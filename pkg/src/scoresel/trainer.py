"""Training loop: minibatch Adam on the scorer/selector objective.

One run is fully determined by (dataset, split, config): initialization
comes from ``init_params(m, d, phi, cfg.seed)`` and the per-epoch shuffle
stream is seeded from the same config seed, so identical inputs reproduce
bitwise-identical trajectories. The top-k mask is recomputed on every batch
inside the gradient call, letting scorer and selector keep interacting
throughout training.

Validation checkpointing tracks the full objective; both the best-validation
and the final-epoch parameters are returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dataio import Dataset, SplitSpec
from .model_core import LossBreakdown, ModelParams, ScorerMap, loss, gradients, topk_mask, score_vector
from .optim import adam_step, init_adam, init_params

DEFAULT_LAMBDA1 = 1.0 / 2**7


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run.

    d defaults to k (latent dimension equals the number of selected
    features); batch_size 0 means full batch.
    """

    k: int
    lambda1: float = DEFAULT_LAMBDA1
    d: int | None = None
    epochs: int = 200
    batch_size: int = 128
    lr: float = 0.001
    phi: ScorerMap = ScorerMap.SQUARE
    seed: int = 0
    shuffle: bool = True

    def latent_dim(self) -> int:
        return self.k if self.d is None else self.d

    def validate(self, m: int) -> None:
        if not 1 <= self.k <= m:
            raise ValueError(f"k={self.k} out of range [1, {m}]")
        d = self.latent_dim()
        if not 1 <= d <= m:
            raise ValueError(f"d={d} out of range [1, {m}]")
        if self.lambda1 < 0:
            raise ValueError("lambda1 must be non-negative")
        if self.epochs < 0 or self.batch_size < 0:
            raise ValueError("epochs and batch_size must be non-negative")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train: LossBreakdown
    val: LossBreakdown | None
    kept_idx: tuple[int, ...]


@dataclass
class TrainReport:
    """Per-epoch telemetry plus the final and best-validation parameters."""

    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    best_params: ModelParams | None = None
    final_params: ModelParams | None = None

    def record_dicts(self) -> list[dict]:
        out = []
        for r in self.records:
            row = {
                "epoch": r.epoch,
                "train_selec": r.train.selec,
                "train_score": r.train.score,
                "train_total": r.train.total,
                "kept_idx": list(r.kept_idx),
            }
            if r.val is not None:
                row["val_selec"] = r.val.selec
                row["val_score"] = r.val.score
                row["val_total"] = r.val.total
            out.append(row)
        return out


def _batches(n: int, batch_size: int):
    if batch_size == 0 or batch_size >= n:
        yield slice(0, n)
        return
    for start in range(0, n, batch_size):
        yield slice(start, min(start + batch_size, n))


def train(ds: Dataset, sp: SplitSpec, cfg: TrainConfig) -> TrainReport:
    """Run the full training loop and return telemetry plus trained params."""
    if sp.train_idx.size == 0:
        raise ValueError("train split is empty")
    m = ds.n_features
    cfg.validate(m)
    x_train = ds.x[sp.train_idx]
    x_val = ds.x[sp.val_idx] if sp.val_idx.size else None

    params = init_params(m, cfg.latent_dim(), cfg.phi, cfg.seed)
    state = init_adam(params, cfg.lr)
    shuffle_rng = np.random.default_rng([cfg.seed, 1])

    report = TrainReport()
    best_total = np.inf
    n = x_train.shape[0]
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n) if cfg.shuffle else np.arange(n)
        for b, sl in enumerate(_batches(n, cfg.batch_size)):
            xb = x_train[order[sl]]
            grads = gradients(params, xb, cfg.k, cfg.lambda1)
            try:
                state, params = adam_step(state, params, grads)
            except ValueError as err:
                raise ValueError(f"epoch {epoch}, batch {b}: {err}") from err
        train_lb = loss(params, x_train, cfg.k, cfg.lambda1)
        if not np.isfinite(train_lb.total):
            raise ValueError(f"epoch {epoch}: non-finite training loss")
        val_lb = loss(params, x_val, cfg.k, cfg.lambda1) if x_val is not None else None
        kept = topk_mask(score_vector(params), cfg.k).kept_idx
        report.records.append(
            EpochRecord(
                epoch=epoch,
                train=train_lb,
                val=val_lb,
                kept_idx=tuple(int(i) for i in kept),
            )
        )
        # checkpoint on validation total (train total when no val rows);
        # strict < keeps the earliest epoch among exact ties
        monitored = val_lb.total if val_lb is not None else train_lb.total
        if monitored < best_total:
            best_total = monitored
            report.best_epoch = epoch
            report.best_params = params.copy()

    report.final_params = params
    if report.best_params is None:  # epochs == 0
        report.best_epoch = -1
        report.best_params = params
    return report


def leave_one_out_retrain(
    ds: Dataset, sp: SplitSpec, cfg: TrainConfig, j: int
) -> TrainReport:
    """Retrain with dataset row j dropped from the train split.

    Everything else (seed, config, remaining row order) is unchanged, so the
    perturbation is exactly the deleted sample.
    """
    keep = sp.train_idx[sp.train_idx != j]
    if keep.size == sp.train_idx.size:
        raise ValueError(f"row {j} is not in the train split")
    return train(ds, replace(sp, train_idx=keep), cfg)
