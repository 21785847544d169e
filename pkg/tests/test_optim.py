"""Initialization and Adam optimizer tests."""

import numpy as np
import pytest

from scoresel.model_core import ModelParams, ScorerMap
from scoresel.optim import (
    SCORER_INIT_HIGH,
    SCORER_INIT_LOW,
    adam_step,
    init_adam,
    init_params,
)


class TestInitParams:
    def test_scorer_weights_in_interval_and_distinct(self):
        p = init_params(m=50, d=10, phi=ScorerMap.SQUARE, seed=0)
        assert np.all(p.w_m >= SCORER_INIT_LOW)
        assert np.all(p.w_m <= SCORER_INIT_HIGH)
        assert len(set(p.w_m.tolist())) == 50

    def test_deterministic_in_seed(self):
        a = init_params(m=8, d=3, phi=ScorerMap.ABS, seed=42)
        b = init_params(m=8, d=3, phi=ScorerMap.ABS, seed=42)
        np.testing.assert_array_equal(a.w_m, b.w_m)
        np.testing.assert_array_equal(a.w_e, b.w_e)
        np.testing.assert_array_equal(a.w_d, b.w_d)

    def test_xavier_variance(self):
        m, d = 200, 100  # m*d = 2e4 draws
        p = init_params(m=m, d=d, phi=ScorerMap.ABS, seed=7)
        target = 2.0 / (m + d)
        assert abs(p.w_e.var() - target) / target < 0.2
        assert abs(p.w_d.var() - target) / target < 0.2

    def test_d_bounds(self):
        with pytest.raises(ValueError):
            init_params(m=3, d=4, phi=ScorerMap.ABS, seed=0)
        with pytest.raises(ValueError):
            init_params(m=3, d=0, phi=ScorerMap.ABS, seed=0)


def scalar_params(value):
    return ModelParams(
        w_m=np.array([value]), w_e=np.eye(1), w_d=np.eye(1), phi=ScorerMap.ABS
    )


def zeros_like_grads(p):
    return (np.zeros_like(p.w_m), np.zeros_like(p.w_e), np.zeros_like(p.w_d))


class TestAdamStep:
    def test_zero_gradient_fixed_point(self):
        p = init_params(m=4, d=2, phi=ScorerMap.ABS, seed=0)
        state = init_adam(p, lr=0.01)
        new_state, new_p = adam_step(state, p, zeros_like_grads(p))
        assert new_state.t == 1
        np.testing.assert_array_equal(new_p.w_m, p.w_m)
        np.testing.assert_array_equal(new_p.w_e, p.w_e)
        np.testing.assert_array_equal(new_p.w_d, p.w_d)

    def test_first_step_closed_form(self):
        # with zero moments, m_hat = g and v_hat = g^2: step = -lr*g/(|g|+eps)
        rng = np.random.default_rng(3)
        p = ModelParams(
            w_m=rng.normal(size=3),
            w_e=rng.normal(size=(3, 2)),
            w_d=rng.normal(size=(2, 3)),
            phi=ScorerMap.SQUARE,
        )
        grads = (
            rng.normal(size=3) * 10,
            rng.normal(size=(3, 2)) * 0.01,
            rng.normal(size=(2, 3)),
        )
        state = init_adam(p, lr=0.05)
        _, new_p = adam_step(state, p, grads)
        for old, new, g in zip(
            (p.w_m, p.w_e, p.w_d), (new_p.w_m, new_p.w_e, new_p.w_d), grads
        ):
            expected = old - 0.05 * g / (np.abs(g) + state.eps)
            np.testing.assert_allclose(new, expected, rtol=1e-12)

    def test_quadratic_bowl_convergence(self):
        # f(theta) = theta^2; 500 steps at lr 0.05 drive |theta| below 0.01
        p = scalar_params(1.0)
        state = init_adam(p, lr=0.05)
        for _ in range(500):
            grads = (2.0 * p.w_m, np.zeros_like(p.w_e), np.zeros_like(p.w_d))
            state, p = adam_step(state, p, grads)
        assert abs(p.w_m[0]) < 0.01

    def test_non_finite_gradient_raises(self):
        p = scalar_params(1.0)
        state = init_adam(p, lr=0.01)
        bad = (np.array([np.nan]), np.zeros_like(p.w_e), np.zeros_like(p.w_d))
        with pytest.raises(ValueError, match="w_m"):
            adam_step(state, p, bad)

    def test_step_counter_and_purity(self):
        p = scalar_params(1.0)
        state = init_adam(p, lr=0.01)
        grads = (np.array([1.0]), np.zeros_like(p.w_e), np.zeros_like(p.w_d))
        s1, p1 = adam_step(state, p, grads)
        s2, _ = adam_step(s1, p1, grads)
        assert (state.t, s1.t, s2.t) == (0, 1, 2)
        assert p.w_m[0] == 1.0  # input untouched
        assert np.all(s2.m2[0] >= 0)

    def test_deterministic_trajectory(self):
        def run():
            p = init_params(m=5, d=2, phi=ScorerMap.SQUARE, seed=9)
            state = init_adam(p, lr=0.01)
            rng = np.random.default_rng(11)
            for _ in range(50):
                grads = (
                    rng.normal(size=5),
                    rng.normal(size=(5, 2)),
                    rng.normal(size=(2, 5)),
                )
                state, p = adam_step(state, p, grads)
            return p

        a, b = run(), run()
        np.testing.assert_array_equal(a.w_m, b.w_m)
        np.testing.assert_array_equal(a.w_e, b.w_e)
        np.testing.assert_array_equal(a.w_d, b.w_d)
