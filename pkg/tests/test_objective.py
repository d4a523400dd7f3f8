import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyprank.data import TripleBatch
from hyprank.encoder import encode_backward
from hyprank.geometry import metric_scale, poincare_distance
from hyprank.objective import (
    LossConfig,
    ScoreLayer,
    cosine_grad,
    cosine_score,
    hinge_loss,
    score,
    triple_backward,
    triple_forward,
)
from hyprank.optim import AdaGrad

from oracles import entrywise_relative_error, fd_gradients, random_triples, tiny_model

LN3 = 1.0986122886681096914


class TestScore:
    def test_unit_layer_is_distance(self):
        q, a = np.array([0.1, 0.2]), np.array([-0.3, 0.4])
        assert score(q, a, ScoreLayer()) == poincare_distance(q, a)

    def test_constant_layer(self):
        assert score([0.1, 0.0], [0.0, 0.7], ScoreLayer(0.0, 3.0)) == 3.0

    def test_affine(self):
        assert score([0.0, 0.0], [0.5, 0.0], ScoreLayer(2.0, 1.0)) == pytest.approx(2 * LN3 + 1, abs=1e-12)


class TestHinge:
    def test_satisfied(self):
        assert hinge_loss(0.5, 2.0, 1.0) == 0.0

    def test_violated(self):
        assert hinge_loss(1.5, 1.0, 1.0) == 1.5

    def test_tie_costs_margin(self):
        assert hinge_loss(0.7, 0.7, 1.0) == 1.0

    def test_cosine_orientation(self):
        assert hinge_loss(0.9, 0.2, 0.5, "cosine") == 0.0
        assert hinge_loss(0.2, 0.9, 0.5, "cosine") == pytest.approx(1.2)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LossConfig(margin=0.0)
        with pytest.raises(ValueError):
            LossConfig(similarity="dot")


class TestCosine:
    def test_self(self):
        assert cosine_score([0.3, -0.4], [0.3, -0.4]) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine_score([1.0, 0.0], [0.0, 2.0]) == 0.0

    def test_opposite(self):
        assert cosine_score([1.0, 0.0], [-1.0, 0.0]) == -1.0

    def test_zero_vector(self):
        assert cosine_score([0.0, 0.0], [1.0, 2.0]) == 0.0
        assert not cosine_grad([0.0, 0.0], [1.0, 2.0]).any()

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            q, a = rng.normal(size=4), rng.normal(size=4)
            h = 1e-6
            fd = np.array([(cosine_score(q + h * e, a) - cosine_score(q - h * e, a)) / (2 * h) for e in np.eye(4)])
            np.testing.assert_allclose(cosine_grad(q, a), fd, rtol=1e-6, atol=1e-9)


def active_setup(seed, riemannian=False, similarity="hyperbolic", count=6, margin=1.0):
    rng, model = tiny_model(seed, similarity=similarity)
    batch = random_triples(rng, model, count)
    config = LossConfig(margin, similarity, riemannian)
    return model, batch, config


class TestTripleBackward:
    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("similarity", ["hyperbolic", "cosine"])
    def test_matches_finite_differences(self, seed, similarity):
        model, batch, config = active_setup(seed, similarity=similarity)
        fwd = triple_forward(batch, model, config)
        assert (fwd.losses > 0).any()
        assert not any(c.clipped.any() for c in fwd.caches.values())
        grads = triple_backward(fwd, model, config).as_dict()
        numeric = fd_gradients(model, batch, config)
        for name in ("weight", "bias", "score_weight"):
            assert entrywise_relative_error(grads[name], numeric[name]) < 1e-3, name

    def test_finite_differences_with_clipped_points(self):
        rng, model = tiny_model(11, scale=3.0, w_scale=0.8)
        batch = random_triples(rng, model, 5)
        config = LossConfig(1.0)
        fwd = triple_forward(batch, model, config)
        assert all(c.clipped.any() for c in fwd.caches.values())
        grads = triple_backward(fwd, model, config).as_dict()
        # at the clip radius 1 - |x|^2 ~ 2e-5 amplifies rounding in the loss,
        # so a smaller step is dominated by cancellation error
        numeric = fd_gradients(model, batch, config, h=1e-4)
        for name in ("weight", "bias", "score_weight"):
            assert entrywise_relative_error(grads[name], numeric[name]) < 1e-3, name

    def test_score_weight_is_distance_gap(self):
        model, batch, config = active_setup(1, count=1, margin=100.0)
        fwd = triple_forward(batch, model, config)
        grads = triple_backward(fwd, model, config)
        assert float(grads.score_weight) == pytest.approx(fwd.sim_pos[0] - fwd.sim_neg[0], rel=1e-12)

    @pytest.mark.parametrize("riemannian", [False, True])
    def test_score_bias_gradient_is_exactly_zero(self, riemannian):
        model, batch, config = active_setup(2, riemannian=riemannian)
        grads = triple_backward(triple_forward(batch, model, config), model, config)
        assert float(grads.score_bias) == 0.0

    @pytest.mark.parametrize("riemannian", [False, True])
    def test_zero_loss_gives_zero_gradient(self, riemannian):
        _, model = tiny_model(3)
        ids = np.array([[2, 3, 4]])
        # positive identical to the question, negative far away
        batch = TripleBatch(ids, ids, np.array([[5, 6, 7]]))
        model.scorer.weight[...] = 1.0
        config = LossConfig(1e-9, riemannian=riemannian)
        fwd = triple_forward(batch, model, config)
        assert fwd.loss == 0.0
        grads = triple_backward(fwd, model, config)
        for arr in grads.as_dict().values():
            assert not np.any(arr)

    def test_missing_forward(self):
        _, model = tiny_model(0)
        with pytest.raises(ValueError):
            triple_backward(None, model, LossConfig())

    @pytest.mark.parametrize("seed", range(5))
    def test_conversion_is_exact_metric_scale_per_point(self, seed):
        model, batch, _ = active_setup(seed)
        off = LossConfig(1.0, riemannian=False)
        on = LossConfig(1.0, riemannian=True)
        fwd = triple_forward(batch, model, off)
        g_off = triple_backward(fwd, model, off)
        g_on = triple_backward(fwd, model, on)
        for role, points in fwd.points.items():
            factor = metric_scale(points)[:, None]
            np.testing.assert_allclose(g_on.point_grads[role], factor * g_off.point_grads[role], rtol=1e-9, atol=0)
            # the parameter contribution through each single point scales by the same factor
            for i in range(len(batch)):
                row = np.zeros_like(g_off.point_grads[role])
                row[i] = g_off.point_grads[role][i]
                dw_off, db_off = encode_backward(row, fwd.caches[role])
                row[i] = g_on.point_grads[role][i]
                dw_on, db_on = encode_backward(row, fwd.caches[role])
                np.testing.assert_allclose(dw_on, factor[i] * dw_off, rtol=1e-9, atol=1e-300)
                np.testing.assert_allclose(db_on, factor[i] * db_off, rtol=1e-9, atol=1e-300)
                # positive rescaling never flips a sign
                assert np.array_equal(np.sign(dw_on), np.sign(dw_off))

    def test_conversion_never_applies_to_cosine(self):
        model, batch, _ = active_setup(4, similarity="cosine")
        off = LossConfig(1.0, "cosine", riemannian=False)
        on = LossConfig(1.0, "cosine", riemannian=True)
        fwd = triple_forward(batch, model, off)
        np.testing.assert_array_equal(triple_backward(fwd, model, on).weight,
                                      triple_backward(fwd, model, off).weight)


class TestDescent:
    @given(st.integers(0, 2**31 - 1), st.sampled_from(["hyperbolic", "cosine"]))
    def test_small_step_does_not_increase_loss(self, seed, similarity):
        rng, model = tiny_model(seed, similarity=similarity)
        batch = random_triples(rng, model, 1)
        config = LossConfig(1.0, similarity)
        fwd = triple_forward(batch, model, config)
        if fwd.loss == 0.0:
            return
        grads = triple_backward(fwd, model, config)
        AdaGrad(model.parameters(), lr=1e-6).step(grads.as_dict())
        assert triple_forward(batch, model, config).loss <= fwd.loss

    def test_hundred_instances(self):
        checked = 0
        for seed in range(200):
            rng, model = tiny_model(seed)
            batch = random_triples(rng, model, 1)
            config = LossConfig(1.0)
            fwd = triple_forward(batch, model, config)
            if fwd.loss == 0.0:
                continue
            AdaGrad(model.parameters(), lr=1e-6).step(triple_backward(fwd, model, config).as_dict())
            assert triple_forward(batch, model, config).loss <= fwd.loss
            checked += 1
            if checked == 100:
                break
        assert checked == 100
        assert math.isfinite(fwd.loss)
