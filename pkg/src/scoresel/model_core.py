"""Scorer/selector linear autoencoder: forward passes, losses, gradients.

The model owns three trainable pieces: a per-feature scorer vector ``w_m``
(length m), an encoder matrix (m x d) and a decoder matrix (d x m). A batch
is scaled feature-wise by the non-negative scores phi(w_m) before the
encode/decode round trip. The selector branch additionally zeroes every
score outside the current top-k before scaling, so only k features feed the
reconstruction; the scorer branch uses all m scores. The training objective
is ``mean selector loss + lambda1 * mean scorer loss``.

Diagonal scaling is always a columnwise multiply; no m x m matrix is ever
materialized.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np


class ScorerMap(enum.Enum):
    """Elementwise map turning raw scorer weights into non-negative scores."""

    ABS = "abs"
    SQUARE = "square"

    def apply(self, w: np.ndarray) -> np.ndarray:
        if self is ScorerMap.ABS:
            return np.abs(w)
        return np.square(w)

    def derivative(self, w: np.ndarray) -> np.ndarray:
        # subgradient convention: d|w|/dw = sign(w) with sign(0) = 0
        if self is ScorerMap.ABS:
            return np.sign(w)
        return 2.0 * w


@dataclass
class ModelParams:
    """Trainable parameters: scorer vector, encoder and decoder matrices."""

    w_m: np.ndarray  # (m,)
    w_e: np.ndarray  # (m, d)
    w_d: np.ndarray  # (d, m)
    phi: ScorerMap = ScorerMap.SQUARE

    def __post_init__(self):
        self.w_m = np.asarray(self.w_m, dtype=np.float64)
        self.w_e = np.asarray(self.w_e, dtype=np.float64)
        self.w_d = np.asarray(self.w_d, dtype=np.float64)
        m, d = self.w_e.shape
        if self.w_m.shape != (m,):
            raise ValueError(f"w_m has shape {self.w_m.shape}, expected ({m},)")
        if self.w_d.shape != (d, m):
            raise ValueError(f"w_d has shape {self.w_d.shape}, expected ({d}, {m})")
        if d > m:
            raise ValueError(f"latent dim d={d} exceeds feature count m={m}")

    @property
    def n_features(self) -> int:
        return self.w_m.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.w_e.shape[1]

    def copy(self) -> "ModelParams":
        return ModelParams(self.w_m.copy(), self.w_e.copy(), self.w_d.copy(), self.phi)

    def all_finite(self) -> bool:
        return bool(
            np.isfinite(self.w_m).all()
            and np.isfinite(self.w_e).all()
            and np.isfinite(self.w_d).all()
        )

    def to_dict(self) -> dict:
        return {
            "phi": self.phi.value,
            "w_m": self.w_m.tolist(),
            "w_e": self.w_e.tolist(),
            "w_d": self.w_d.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(
            w_m=np.array(d["w_m"], dtype=np.float64),
            w_e=np.array(d["w_e"], dtype=np.float64),
            w_d=np.array(d["w_d"], dtype=np.float64),
            phi=ScorerMap(d["phi"]),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, sort_keys=True)

    @classmethod
    def load(cls, path) -> "ModelParams":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


@dataclass(frozen=True)
class TopKMask:
    """Binary mask keeping the k largest scores (ties go to the lower index)."""

    k: int
    kept_idx: np.ndarray  # sorted, length k
    mask: np.ndarray  # (m,) of {0.0, 1.0}


@dataclass(frozen=True)
class LossBreakdown:
    """Batch-mean losses of both branches and the combined objective."""

    selec: float
    score: float
    total: float
    lambda1: float


def score_vector(params: ModelParams) -> np.ndarray:
    """Non-negative feature scores phi(w_m)."""
    return params.phi.apply(params.w_m)


def topk_mask(scores: np.ndarray, k: int) -> TopKMask:
    """Mask selecting the k largest scores; equal scores favor lower indices."""
    scores = np.asarray(scores)
    m = scores.shape[0]
    if not 1 <= k <= m:
        raise ValueError(f"k={k} out of range [1, {m}]")
    # stable sort on the negated scores keeps the lower index first among ties
    order = np.argsort(-scores, kind="stable")
    kept = np.sort(order[:k])
    mask = np.zeros(m, dtype=np.float64)
    mask[kept] = 1.0
    return TopKMask(k=k, kept_idx=kept, mask=mask)


def forward(
    params: ModelParams, x: np.ndarray, mask: TopKMask | None = None
) -> np.ndarray:
    """Reconstruction ((x * s) W_E) W_D; with a mask, s is zeroed off the top-k."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.n_features:
        raise ValueError(
            f"batch has shape {x.shape}, expected (b, {params.n_features})"
        )
    s = score_vector(params)
    if mask is not None:
        s = s * mask.mask
    return ((x * s) @ params.w_e) @ params.w_d


def loss(params: ModelParams, x: np.ndarray, k: int, lambda1: float) -> LossBreakdown:
    """Batch-mean losses of Eq-style objective; the mask is recomputed here."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    if lambda1 < 0:
        raise ValueError("lambda1 must be non-negative")
    mask = topk_mask(score_vector(params), k)
    b = x.shape[0]
    e_sel = forward(params, x, mask) - x
    e_sco = forward(params, x) - x
    selec = float(np.sum(e_sel * e_sel) / b)
    score = float(np.sum(e_sco * e_sco) / b)
    return LossBreakdown(selec=selec, score=score, total=selec + lambda1 * score, lambda1=lambda1)


def selector_losses(params: ModelParams, x: np.ndarray, k: int) -> np.ndarray:
    """Per-sample squared reconstruction errors of the selector branch."""
    mask = topk_mask(score_vector(params), k)
    e = forward(params, x, mask) - x
    return np.sum(e * e, axis=1)


def scorer_losses(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Per-sample squared reconstruction errors of the scorer branch."""
    e = forward(params, x) - x
    return np.sum(e * e, axis=1)


def _branch_backward(x: np.ndarray, scale: np.ndarray, w_e: np.ndarray, w_d: np.ndarray):
    """Gradients of the batch-mean squared error of one branch.

    Returns (loss, g_scale, g_we, g_wd) where g_scale is the gradient with
    respect to the per-feature scale vector applied to x.
    """
    b = x.shape[0]
    z = x * scale
    h = z @ w_e
    e = h @ w_d - x
    g_r = (2.0 / b) * e
    g_wd = h.T @ g_r
    g_h = g_r @ w_d.T
    g_we = z.T @ g_h
    g_z = g_h @ w_e.T
    g_scale = np.einsum("ij,ij->j", x, g_z)
    return float(np.sum(e * e) / b), g_scale, g_we, g_wd


def gradients(
    params: ModelParams, x: np.ndarray, k: int, lambda1: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of the combined objective.

    The top-k mask is computed once from the current params and held fixed
    (piecewise-constant treatment of the selector), so masked-out scorer
    coordinates receive no selector-branch gradient.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    s = score_vector(params)
    mask = topk_mask(s, k)
    _, g_scale_sel, g_we_sel, g_wd_sel = _branch_backward(
        x, s * mask.mask, params.w_e, params.w_d
    )
    _, g_scale_sco, g_we_sco, g_wd_sco = _branch_backward(
        x, s, params.w_e, params.w_d
    )
    dphi = params.phi.derivative(params.w_m)
    g_w = g_scale_sel * mask.mask * dphi + lambda1 * g_scale_sco * dphi
    g_we = g_we_sel + lambda1 * g_we_sco
    g_wd = g_wd_sel + lambda1 * g_wd_sco
    return g_w, g_we, g_wd
