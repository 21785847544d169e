"""Parameter initialization and a from-scratch Adam optimizer.

Initialization follows the training recipe: scorer weights drawn uniformly
from the tiny interval just below 1 (close to 1 but pairwise distinct, which
breaks top-k ties), encoder/decoder entries from the Xavier normal
distribution. Adam uses the usual bias-corrected moment estimates with the
standard constants; only the learning rate is configurable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model_core import ModelParams, ScorerMap

# uniform init interval for the scorer weights (order-normalized endpoints)
SCORER_INIT_LOW = min(0.999999, 0.9999999)
SCORER_INIT_HIGH = max(0.999999, 0.9999999)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators for (w_m, w_e, w_d) plus step count."""

    m1: tuple[np.ndarray, np.ndarray, np.ndarray]
    m2: tuple[np.ndarray, np.ndarray, np.ndarray]
    t: int
    lr: float
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS


def init_params(m: int, d: int, phi: ScorerMap, seed: int) -> ModelParams:
    """Seed-deterministic initial parameters.

    Draw order is fixed (w_m, then w_e, then w_d) so a seed pins the full
    parameter set bit-for-bit.
    """
    if not 1 <= d <= m:
        raise ValueError(f"need 1 <= d <= m, got d={d}, m={m}")
    rng = np.random.default_rng(seed)
    w_m = rng.uniform(SCORER_INIT_LOW, SCORER_INIT_HIGH, size=m)
    std = np.sqrt(2.0 / (m + d))
    w_e = rng.normal(0.0, std, size=(m, d))
    w_d = rng.normal(0.0, std, size=(d, m))
    return ModelParams(w_m=w_m, w_e=w_e, w_d=w_d, phi=phi)


def init_adam(params: ModelParams, lr: float) -> AdamState:
    zeros = (
        np.zeros_like(params.w_m),
        np.zeros_like(params.w_e),
        np.zeros_like(params.w_d),
    )
    zeros2 = tuple(z.copy() for z in zeros)
    return AdamState(m1=zeros, m2=zeros2, t=0, lr=lr)


def adam_step(
    state: AdamState,
    params: ModelParams,
    grads: tuple[np.ndarray, np.ndarray, np.ndarray],
) -> tuple[AdamState, ModelParams]:
    """One bias-corrected Adam update over the joint parameter set.

    Pure: returns fresh state and params. Raises on non-finite gradients so
    a diverging run aborts loudly instead of silently producing NaNs.
    """
    names = ("w_m", "w_e", "w_d")
    arrays = (params.w_m, params.w_e, params.w_d)
    for name, g in zip(names, grads):
        if not np.isfinite(g).all():
            raise ValueError(f"non-finite gradient in {name}")
    t = state.t + 1
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    new_m1, new_m2, new_arrays = [], [], []
    for theta, g, m1, m2 in zip(arrays, grads, state.m1, state.m2):
        m1 = state.beta1 * m1 + (1.0 - state.beta1) * g
        m2 = state.beta2 * m2 + (1.0 - state.beta2) * g * g
        step = state.lr * (m1 / bc1) / (np.sqrt(m2 / bc2) + state.eps)
        # loose runtime bound on the step size; a gradient spike onto a
        # coordinate with a decayed second moment can reach ~3.2*lr, so the
        # provable lr/(1-beta1) bound is asserted rather than a tighter one
        assert np.all(np.abs(step) <= state.lr / (1.0 - state.beta1) + 1e-15)
        new_m1.append(m1)
        new_m2.append(m2)
        new_arrays.append(theta - step)
    new_state = replace(state, m1=tuple(new_m1), m2=tuple(new_m2), t=t)
    new_params = ModelParams(
        w_m=new_arrays[0], w_e=new_arrays[1], w_d=new_arrays[2], phi=params.phi
    )
    return new_state, new_params
