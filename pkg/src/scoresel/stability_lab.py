"""Generalization-gap and stability experiments.

Five studies: the error difference (test minus train selector loss) as a
function of the training-set size, of the regularization weight, and of the
number of selected features; an empirical uniform-stability estimate from
leave-one-out retraining; and the overlap of selected features across
re-splits with different seeds.

Each sweep point derives its randomness from (master seed, point value), so
a prefix of a sweep reproduces exactly the same points as the full sweep.
Trend claims are left to callers as rank-correlation checks on the recorded
tables; this module only measures. The trained model evaluated at each point
is the final-epoch one (the empirical minimizer after the full budget), not
the validation checkpoint.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .dataio import Dataset, SplitSpec, split, standardize, subsample
from .model_core import ModelParams, selector_losses
from .trainer import TrainConfig, leave_one_out_retrain, train

SWEEP_N = "n"
SWEEP_LAMBDA1 = "lambda1"
SWEEP_K = "k"
SWEEP_BETA = "beta"
SWEEP_OVERLAP = "overlap"

# default lambda1 grid: 0 plus the tuning ladder {1/2^10, ..., 1/2^0, 2}
DEFAULT_LAMBDA_GRID = (0.0,) + tuple(2.0**-i for i in range(10, -2, -1))


@dataclass(frozen=True)
class SweepPoint:
    """One sweep measurement; params are kept for reuse, never exported."""

    swept_value: float
    error_diff: float
    test_error: float
    aux: dict = field(default_factory=dict)
    params: ModelParams | None = field(default=None, compare=False, repr=False)


@dataclass
class StabilityReport:
    kind: str
    sweep: list[SweepPoint]
    config: dict
    seeds: tuple[int, ...]
    summary: dict = field(default_factory=dict)


def _cfg_snapshot(cfg: TrainConfig) -> dict:
    return {
        "k": cfg.k,
        "lambda1": cfg.lambda1,
        "d": cfg.latent_dim(),
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "lr": cfg.lr,
        "phi": cfg.phi.value,
        "seed": cfg.seed,
        "shuffle": cfg.shuffle,
    }


def _gap_point(
    ds: Dataset, sp: SplitSpec, cfg: TrainConfig, swept: float, aux: dict | None = None
) -> SweepPoint:
    report = train(ds, sp, cfg)
    params = report.final_params
    train_err = float(np.mean(selector_losses(params, ds.x[sp.train_idx], cfg.k)))
    test_err = float(np.mean(selector_losses(params, ds.x[sp.test_idx], cfg.k)))
    point_aux = {"train_error": train_err}
    if aux:
        point_aux.update(aux)
    return SweepPoint(
        swept_value=float(swept),
        error_diff=test_err - train_err,
        test_error=test_err,
        aux=point_aux,
        params=params,
    )


def _check_increasing(values, what: str) -> None:
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{what} values must be strictly increasing")


def sweep_n(ds: Dataset, sp: SplitSpec, cfg: TrainConfig, n_values, seed: int) -> StabilityReport:
    """Gap vs training-set size, on nested seeded subsamples of the train split."""
    _check_increasing(n_values, "n")
    points = []
    for n in n_values:
        sp_n = subsample(ds, sp, int(n), seed)
        points.append(_gap_point(ds, sp_n, cfg, n, aux={"n_train": float(n)}))
    return StabilityReport(
        kind=SWEEP_N, sweep=points, config=_cfg_snapshot(cfg), seeds=(int(seed),)
    )


def sweep_lambda1(
    ds: Dataset, sp: SplitSpec, cfg: TrainConfig, lambda_values, seed: int
) -> StabilityReport:
    """Gap vs regularization weight on the full train split."""
    if any(v < 0 for v in lambda_values):
        raise ValueError("lambda1 values must be non-negative")
    _check_increasing(lambda_values, "lambda1")
    points = [
        _gap_point(ds, sp, replace(cfg, lambda1=float(v)), v) for v in lambda_values
    ]
    return StabilityReport(
        kind=SWEEP_LAMBDA1, sweep=points, config=_cfg_snapshot(cfg), seeds=(int(seed),)
    )


def sweep_k(ds: Dataset, sp: SplitSpec, cfg: TrainConfig, k_values, seed: int) -> StabilityReport:
    """Gap vs selected-feature count; latent dimension tracks k.

    Records the Frobenius norms of the encoder/decoder product, full and
    restricted to the selected rows, alongside each point.
    """
    _check_increasing(k_values, "k")
    if max(k_values) > ds.n_features:
        raise ValueError("k exceeds the feature count")
    points = []
    for k in k_values:
        cfg_k = replace(cfg, k=int(k), d=int(k))
        point = _gap_point(ds, sp, cfg_k, k)
        params = point.params
        from .model_core import score_vector, topk_mask  # local to avoid cycle noise

        prod = params.w_e @ params.w_d
        mask = topk_mask(score_vector(params), int(k)).mask
        point.aux["fro_full"] = float(np.linalg.norm(prod))
        point.aux["fro_selected"] = float(np.linalg.norm(mask[:, None] * prod))
        points.append(point)
    return StabilityReport(
        kind=SWEEP_K, sweep=points, config=_cfg_snapshot(cfg), seeds=(int(seed),)
    )


def estimate_beta(
    ds: Dataset,
    sp: SplitSpec,
    cfg: TrainConfig,
    n_values,
    deletions_per_n: int,
    seed: int,
) -> StabilityReport:
    """Empirical uniform-stability estimate from leave-one-out retraining.

    For each n, trains on the size-n subsample, deletes deletions_per_n
    seeded train rows one at a time, retrains, and records the largest
    absolute selector-loss change over test samples and deletions
    (aux.beta_max, the headline estimate; aux.beta_mean averages instead).
    """
    if deletions_per_n < 1:
        raise ValueError("deletions_per_n must be >= 1")
    _check_increasing(n_values, "n")
    points = []
    for n in n_values:
        sp_n = subsample(ds, sp, int(n), seed)
        point = _gap_point(ds, sp_n, cfg, n, aux={"n_train": float(n)})
        base_losses = selector_losses(point.params, ds.x[sp_n.test_idx], cfg.k)
        del_rng = np.random.default_rng([seed, 2, int(n)])
        deleted = del_rng.choice(sp_n.train_idx, size=deletions_per_n, replace=False)
        diffs = []
        for j in deleted:
            loo = leave_one_out_retrain(ds, sp_n, cfg, int(j))
            loo_losses = selector_losses(loo.final_params, ds.x[sp_n.test_idx], cfg.k)
            diffs.append(np.abs(base_losses - loo_losses))
        diffs = np.stack(diffs)
        point.aux["beta_max"] = float(diffs.max())
        point.aux["beta_mean"] = float(diffs.mean())
        points.append(point)
    return StabilityReport(
        kind=SWEEP_BETA, sweep=points, config=_cfg_snapshot(cfg), seeds=(int(seed),)
    )


def selection_overlap(
    ds: Dataset,
    cfg: TrainConfig,
    seeds,
    ratios=(0.72, 0.08, 0.20),
    standardize_data: bool = True,
) -> StabilityReport:
    """Selected-feature agreement across re-splits with different seeds.

    ds must be the raw (unstandardized) dataset; each seed re-splits and
    re-standardizes before training, mimicking independent experiments.
    Reports per-seed selections, the mean pairwise Jaccard overlap and the
    per-feature selection frequency.
    """
    seeds = [int(s) for s in seeds]
    if len(seeds) < 2:
        raise ValueError("need at least 2 seeds")
    selections: dict[int, frozenset[int]] = {}
    points = []
    for s in sorted(set(seeds)):
        sp = split(ds, ratios, s)
        ds_s = standardize(ds, sp) if standardize_data else ds
        point = _gap_point(ds_s, sp, cfg, s)
        kept = frozenset(
            int(i)
            for i in np.argsort(
                -point.params.phi.apply(point.params.w_m), kind="stable"
            )[: cfg.k]
        )
        selections[s] = kept
        point.aux["kept_idx"] = "|".join(str(i) for i in sorted(kept))
        points.append(point)

    ordered = [selections[s] for s in sorted(set(seeds))]
    # duplicate seeds in the input contribute overlap-1 pairs by determinism
    pair_overlaps = []
    for i in range(len(seeds)):
        for j in range(i + 1, len(seeds)):
            a, b = selections[seeds[i]], selections[seeds[j]]
            pair_overlaps.append(len(a & b) / len(a | b))
    freq = np.zeros(ds.n_features)
    for kept in (selections[s] for s in seeds):
        for i in kept:
            freq[i] += 1
    freq /= len(seeds)
    return StabilityReport(
        kind=SWEEP_OVERLAP,
        sweep=points,
        config=_cfg_snapshot(cfg),
        seeds=tuple(sorted(set(seeds))),
        summary={
            "mean_pairwise_jaccard": float(np.mean(pair_overlaps)),
            "selection_frequency": freq.tolist(),
        },
    )


def _aux_columns(report: StabilityReport) -> list[str]:
    keys: set[str] = set()
    for p in report.sweep:
        keys.update(p.aux)
    return sorted(keys)


def report_to_csv(report: StabilityReport, path) -> None:
    """One row per sweep point: swept_value, error_diff, test_error, aux.*."""
    aux_cols = _aux_columns(report)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["swept_value", "error_diff", "test_error"] + [f"aux.{c}" for c in aux_cols]
        )
        for p in report.sweep:
            writer.writerow(
                [repr(p.swept_value), repr(p.error_diff), repr(p.test_error)]
                + [
                    repr(p.aux[c]) if isinstance(p.aux.get(c), float) else str(p.aux.get(c, ""))
                    for c in aux_cols
                ]
            )


def report_to_json(report: StabilityReport, path) -> None:
    payload = {
        "kind": report.kind,
        "config": report.config,
        "seeds": list(report.seeds),
        "summary": report.summary,
        "sweep": [
            {
                "swept_value": p.swept_value,
                "error_diff": p.error_diff,
                "test_error": p.test_error,
                "aux": p.aux,
            }
            for p in report.sweep
        ],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True)
