import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hyprank.optim import AdaGrad, DivergenceError, adagrad_step


def test_zero_grad_is_noop():
    param, acc = np.array([1.0, -2.0]), np.array([0.5, 0.0])
    new, new_acc = adagrad_step(param, np.zeros(2), acc, lr=0.1)
    np.testing.assert_array_equal(new, param)
    np.testing.assert_array_equal(new_acc, acc)


def test_first_step_is_about_lr():
    new, acc = adagrad_step(np.array(0.0), np.array(3.0), np.array(0.0), lr=0.1)
    assert float(new) == pytest.approx(-0.1 * 3 / np.sqrt(9 + 1e-8), rel=1e-15)
    assert float(acc) == 9.0


def test_two_identical_steps():
    p, acc = np.array(0.0), np.array(0.0)
    p1, acc = adagrad_step(p, np.array(1.0), acc, lr=0.1)
    p2, acc = adagrad_step(p1, np.array(1.0), acc, lr=0.1)
    assert float(p1) == pytest.approx(-0.1, rel=1e-8)
    assert float(p2 - p1) == pytest.approx(-0.1 / np.sqrt(2), rel=1e-8)


def test_l2_folded_into_gradient():
    new, acc = adagrad_step(np.array(2.0), np.array(0.0), np.array(0.0), lr=0.1, l2=0.5)
    # g = 0 + 0.5 * 2 = 1
    assert float(acc) == 1.0
    assert float(new) == pytest.approx(2.0 - 0.1 / np.sqrt(1 + 1e-8), rel=1e-15)


def test_non_finite_grad():
    with pytest.raises(DivergenceError):
        adagrad_step(np.zeros(2), np.array([np.nan, 0.0]), np.zeros(2), lr=0.1)


def test_decay_applies_only_to_named_parameters():
    params = {"weight": np.array([1.0]), "bias": np.array([1.0])}
    opt = AdaGrad(params, lr=0.1, l2=1.0, decay=("weight",))
    opt.step({"weight": np.zeros(1), "bias": np.zeros(1)})
    assert params["weight"][0] < 1.0
    assert params["bias"][0] == 1.0


def test_step_updates_in_place_and_is_atomic():
    params = {"a": np.array([1.0]), "b": np.array([1.0])}
    views = {k: v for k, v in params.items()}
    opt = AdaGrad(params, lr=0.1)
    opt.step({"a": np.array([1.0]), "b": np.array([1.0])})
    assert views["a"][0] < 1.0
    before = {k: v.copy() for k, v in params.items()}
    with pytest.raises(DivergenceError):
        opt.step({"a": np.array([1.0]), "b": np.array([np.inf])})
    for k in params:
        np.testing.assert_array_equal(params[k], before[k])


def test_invalid_hyperparameters():
    with pytest.raises(ValueError):
        AdaGrad({}, lr=0.0)
    with pytest.raises(ValueError):
        AdaGrad({}, lr=0.1, l2=-1.0)


grads = arrays(np.float64, 3, elements=st.floats(-1e3, 1e3, allow_nan=False))


@settings(max_examples=100)
@given(st.lists(grads, min_size=1, max_size=8), st.floats(1e-4, 1.0))
def test_step_bound_and_monotone_accumulator(seq, lr):
    param, acc = np.zeros(3), np.zeros(3)
    for g in seq:
        new, new_acc = adagrad_step(param, g, acc, lr)
        assert np.all(np.abs(new - param) <= lr * (1 + 1e-12))
        assert np.all(new_acc >= acc)
        param, acc = new, new_acc


def test_deterministic():
    rng = np.random.default_rng(0)
    seq = rng.normal(size=(20, 4))

    def run():
        params = {"weight": np.ones(4)}
        opt = AdaGrad(params, lr=0.05, l2=1e-3)
        for g in seq:
            opt.step({"weight": g})
        return params["weight"]

    np.testing.assert_array_equal(run(), run())
