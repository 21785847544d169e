"""Request/response models of the experiment service.

Every config model forbids unknown keys, so a typo like "lamda1" is a
validation error naming the offending field instead of a silently ignored
setting.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DatasetConfig(StrictModel):
    path: str
    has_header: bool = True
    label_column: str | None = None
    standardize: bool = True


class SplitConfig(StrictModel):
    ratios: tuple[float, float, float] = (0.72, 0.08, 0.20)
    seed: int = 0


class TrainSection(StrictModel):
    k: int = Field(ge=1)
    lambda1: float = Field(default=1.0 / 2**7, ge=0)
    d: int | None = Field(default=None, ge=1)
    epochs: int = Field(default=200, ge=0)
    batch_size: int = Field(default=128, ge=0)
    lr: float = Field(default=0.001, gt=0)
    phi: Literal["abs", "square"] = "square"
    seed: int = 0
    shuffle: bool = True


class EvalSection(StrictModel):
    ols: bool = True
    classify: bool = False
    ridge_eps: float = Field(default=1e-8, ge=0)
    n_trees: int = Field(default=50, ge=1)
    trees_seed: int = 0


class RunConfig(StrictModel):
    """Full experiment configuration; the CLI config file maps onto this."""

    dataset: DatasetConfig
    train: TrainSection
    split: SplitConfig = SplitConfig()
    evaluate: EvalSection = EvalSection()
    output_dir: str = "runs"


class TrainResponse(StrictModel):
    output_dir: str
    files: list[str]
    best_epoch: int
    final_train_total: float
    final_val_total: float | None
    kept_idx: list[int]


class SelectRequest(StrictModel):
    params_path: str
    k: int = Field(ge=1)
    output_path: str | None = None


class SelectResponse(StrictModel):
    kept_idx: list[int]
    scores: list[float]
    output_path: str | None


class EvalRequest(StrictModel):
    config: RunConfig
    params_path: str
    which: Literal["final", "best"] = "final"


class EvalResponse(StrictModel):
    metrics: dict
    output_path: str


class OracleRequest(StrictModel):
    config: RunConfig
    k: int | None = Field(default=None, ge=1)


class OracleResponse(StrictModel):
    best_idx: list[int]
    best_err: float
    output_path: str


class SweepRequest(StrictModel):
    config: RunConfig
    values: list[float]
    sweep_seed: int = 0
    train_subsample: int | None = Field(default=None, ge=1)


class BetaRequest(StrictModel):
    config: RunConfig
    n_values: list[int]
    deletions_per_n: int = Field(default=1, ge=1)
    sweep_seed: int = 0


class OverlapRequest(StrictModel):
    config: RunConfig
    seeds: list[int]


class ReportResponse(StrictModel):
    kind: str
    csv_path: str
    json_path: str
    swept_values: list[float]
    error_diff: list[float]
    test_error: list[float]
    summary: dict


class GenSynthRequest(StrictModel):
    m: int = Field(ge=2)
    n: int = Field(ge=3)
    n_informative: int = Field(ge=1)
    noise: float = Field(ge=0)
    seed: int = 0
    n_classes: int = Field(default=2, ge=2)
    output_dir: str = "runs"


class GenSynthResponse(StrictModel):
    data_path: str
    meta_path: str
    planted_idx: list[int]
