"""Forward/loss/gradient tests for the scorer/selector autoencoder."""

import numpy as np
import pytest

from scoresel.model_core import (
    LossBreakdown,
    ModelParams,
    ScorerMap,
    forward,
    gradients,
    loss,
    score_vector,
    selector_losses,
    topk_mask,
)


def make_params(w_m, w_e, w_d, phi=ScorerMap.ABS):
    return ModelParams(
        w_m=np.asarray(w_m, dtype=float),
        w_e=np.asarray(w_e, dtype=float),
        w_d=np.asarray(w_d, dtype=float),
        phi=phi,
    )


def identity_params(m, phi=ScorerMap.ABS):
    return make_params(np.ones(m), np.eye(m), np.eye(m), phi)


def random_instance(rng, lambda1, max_m=8, max_d=4, max_b=5):
    """Random small instance away from scorer kinks and top-k ties."""
    m = int(rng.integers(2, max_m + 1))
    d = int(rng.integers(1, min(m, max_d) + 1))
    b = int(rng.integers(1, max_b + 1))
    k = int(rng.integers(1, m + 1))
    phi = ScorerMap.ABS if rng.random() < 0.5 else ScorerMap.SQUARE
    while True:
        w_m = rng.uniform(0.2, 1.5, m) * rng.choice([-1.0, 1.0], m)
        s = np.sort(phi.apply(w_m))[::-1]
        if k == m or s[k - 1] - s[k] > 1e-3:
            break
    params = make_params(
        w_m, rng.normal(0, 0.5, (m, d)), rng.normal(0, 0.5, (d, m)), phi
    )
    x = rng.normal(0, 1.0, (b, m))
    return params, x, k, lambda1


def fd_gradient(params, x, k, lambda1, step=1e-5):
    """Central finite differences of the actual loss function."""
    grads = []
    for arr in (params.w_m, params.w_e, params.w_d):
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + step
            up = loss(params, x, k, lambda1).total
            arr[idx] = orig - step
            down = loss(params, x, k, lambda1).total
            arr[idx] = orig
            g[idx] = (up - down) / (2 * step)
        grads.append(g)
    return tuple(grads)


class TestScoreVector:
    def test_abs(self):
        p = make_params([-2.0, 3.0], np.zeros((2, 1)), np.zeros((1, 2)), ScorerMap.ABS)
        np.testing.assert_array_equal(score_vector(p), [2.0, 3.0])

    def test_square(self):
        p = make_params([-2.0, 3.0], np.zeros((2, 1)), np.zeros((1, 2)), ScorerMap.SQUARE)
        np.testing.assert_array_equal(score_vector(p), [4.0, 9.0])

    def test_zeros(self):
        for phi in ScorerMap:
            p = make_params([0.0, 0.0], np.zeros((2, 1)), np.zeros((1, 2)), phi)
            np.testing.assert_array_equal(score_vector(p), [0.0, 0.0])


class TestTopkMask:
    def test_ordering(self):
        mask = topk_mask(np.array([4.0, 9.0, 1.0]), 2)
        np.testing.assert_array_equal(mask.kept_idx, [0, 1])
        np.testing.assert_array_equal(mask.mask, [1.0, 1.0, 0.0])

    def test_tie_breaks_to_lower_index(self):
        mask = topk_mask(np.array([5.0, 5.0, 5.0]), 2)
        np.testing.assert_array_equal(mask.kept_idx, [0, 1])

    def test_k_equals_m(self):
        mask = topk_mask(np.array([1.0, 2.0, 3.0]), 3)
        np.testing.assert_array_equal(mask.mask, np.ones(3))

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            topk_mask(np.ones(3), 0)
        with pytest.raises(ValueError):
            topk_mask(np.ones(3), 4)


class TestForward:
    def test_identity_network(self):
        p = identity_params(4)
        x = np.random.default_rng(0).normal(size=(3, 4))
        np.testing.assert_array_equal(forward(p, x), x)

    def test_zero_scores_annihilate(self):
        p = make_params(np.zeros(3), np.eye(3), np.eye(3))
        x = np.random.default_rng(1).normal(size=(2, 3))
        np.testing.assert_array_equal(forward(p, x), np.zeros_like(x))

    def test_full_mask_equals_scorer_branch(self):
        rng = np.random.default_rng(2)
        p = make_params(
            rng.normal(size=4), rng.normal(size=(4, 2)), rng.normal(size=(2, 4))
        )
        x = rng.normal(size=(5, 4))
        mask = topk_mask(score_vector(p), 4)
        np.testing.assert_array_equal(forward(p, x, mask), forward(p, x))

    def test_dimension_mismatch(self):
        p = identity_params(4)
        with pytest.raises(ValueError):
            forward(p, np.ones((2, 3)))

    def test_linear_in_x(self):
        rng = np.random.default_rng(3)
        p = make_params(
            rng.normal(size=5), rng.normal(size=(5, 3)), rng.normal(size=(3, 5)),
            ScorerMap.SQUARE,
        )
        x1 = rng.normal(size=(4, 5))
        x2 = rng.normal(size=(4, 5))
        a, b = 0.7, -1.3
        np.testing.assert_allclose(
            forward(p, a * x1 + b * x2),
            a * forward(p, x1) + b * forward(p, x2),
            atol=1e-10,
        )


class TestLoss:
    def test_identity_network_zero_loss(self):
        p = identity_params(4)
        x = np.random.default_rng(0).normal(size=(6, 4))
        lb = loss(p, x, k=4, lambda1=0.5)
        assert lb.selec == 0.0 and lb.score == 0.0 and lb.total == 0.0

    def test_lambda_zero(self):
        rng = np.random.default_rng(1)
        p = make_params(
            rng.normal(size=4), rng.normal(size=(4, 2)), rng.normal(size=(2, 4))
        )
        lb = loss(p, rng.normal(size=(3, 4)), k=2, lambda1=0.0)
        assert lb.total == lb.selec

    def test_hand_computed_single_sample(self):
        # x=(1,0), scores (1,1), zero network -> selec = score = ||x||^2 = 1
        p = make_params([1.0, 1.0], np.zeros((2, 2)), np.zeros((2, 2)))
        lb = loss(p, np.array([[1.0, 0.0]]), k=1, lambda1=1.0)
        assert lb.selec == 1.0 and lb.score == 1.0 and lb.total == 2.0

    def test_total_identity(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            params, x, k, lam = random_instance(rng, float(rng.uniform(0, 2)))
            lb = loss(params, x, k, lam)
            assert lb.total == pytest.approx(lb.selec + lb.lambda1 * lb.score, rel=1e-12)

    def test_empty_batch_rejected(self):
        p = identity_params(3)
        with pytest.raises(ValueError):
            loss(p, np.empty((0, 3)), k=2, lambda1=0.1)


class TestGradients:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        lambdas = [0.0, 1.0 / 2**7, 2.0]
        for i in range(60):
            params, x, k, lam = random_instance(rng, lambdas[i % 3])
            analytic = gradients(params, x, k, lam)
            numeric = fd_gradient(params, x, k, lam)
            for a, n in zip(analytic, numeric):
                denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)
                assert np.max(np.abs(a - n) / denom) < 1e-4

    def test_masked_out_coordinate_zero_grad(self):
        rng = np.random.default_rng(7)
        params, x, k, _ = random_instance(rng, 0.0)
        if k == params.n_features:
            k -= 1 or 1
        k = max(1, min(k, params.n_features - 1))
        mask = topk_mask(score_vector(params), k)
        g_w, _, _ = gradients(params, x, k, 0.0)
        out = np.setdiff1d(np.arange(params.n_features), mask.kept_idx)
        np.testing.assert_array_equal(g_w[out], 0.0)

    def test_zero_at_global_minimum(self):
        p = identity_params(3)
        x = np.random.default_rng(2).normal(size=(4, 3))
        for g in gradients(p, x, k=3, lambda1=0.7):
            np.testing.assert_array_equal(g, np.zeros_like(g))

    def test_mask_consistency_small_perturbation(self):
        # perturbing a masked-out weight below the tie gap leaves selec unchanged
        p = make_params([1.0, 0.5, 0.2], np.eye(3), np.eye(3))
        x = np.random.default_rng(3).normal(size=(5, 3))
        base = loss(p, x, k=2, lambda1=0.0).selec
        p.w_m[2] += 1e-6
        assert loss(p, x, k=2, lambda1=0.0).selec == base


class TestBranchCoincidence:
    def test_k_equals_m_bitwise(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            m = int(rng.integers(2, 9))
            d = int(rng.integers(1, m + 1))
            phi = ScorerMap.ABS if rng.random() < 0.5 else ScorerMap.SQUARE
            p = make_params(
                rng.normal(size=m), rng.normal(size=(m, d)), rng.normal(size=(d, m)), phi
            )
            x = rng.normal(size=(int(rng.integers(1, 6)), m))
            lb = loss(p, x, k=m, lambda1=0.3)
            assert lb.selec == lb.score


class TestSquareScaling:
    def test_scores_scale_quadratically_and_mask_invariant(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            m = int(rng.integers(2, 10))
            w = rng.uniform(0.1, 2.0, m) * rng.choice([-1.0, 1.0], m)
            p = make_params(w, np.zeros((m, 1)), np.zeros((1, m)), ScorerMap.SQUARE)
            k = int(rng.integers(1, m + 1))
            base_mask = topk_mask(score_vector(p), k)
            c = float(rng.uniform(0.5, 3.0))
            scaled = make_params(
                c * w, np.zeros((m, 1)), np.zeros((1, m)), ScorerMap.SQUARE
            )
            np.testing.assert_allclose(
                score_vector(scaled), c**2 * score_vector(p), rtol=1e-12
            )
            np.testing.assert_array_equal(
                topk_mask(score_vector(scaled), k).kept_idx, base_mask.kept_idx
            )


class TestSerialization:
    def test_json_roundtrip(self, tmp_path):
        rng = np.random.default_rng(17)
        p = make_params(
            rng.normal(size=4), rng.normal(size=(4, 2)), rng.normal(size=(2, 4)),
            ScorerMap.SQUARE,
        )
        path = tmp_path / "params.json"
        p.save(path)
        q = ModelParams.load(path)
        assert q.phi is ScorerMap.SQUARE
        np.testing.assert_array_equal(p.w_m, q.w_m)
        np.testing.assert_array_equal(p.w_e, q.w_e)
        np.testing.assert_array_equal(p.w_d, q.w_d)

    def test_selector_losses_match_loss(self):
        rng = np.random.default_rng(19)
        params, x, k, _ = random_instance(rng, 0.5)
        per_sample = selector_losses(params, x, k)
        assert float(per_sample.mean()) == pytest.approx(
            loss(params, x, k, 0.0).selec, rel=1e-12
        )
