import numpy as np
import pytest

from instrumentid.nn import bce_loss, CLAMP_EPS

from helpers import numeric_gradient, relative_error


def test_perfect_prediction_loss_at_clamp_floor():
    y = np.array([1, 0, 1, 1, 0, 0, 0, 1, 0, 1, 0], dtype=float)
    loss, _ = bce_loss(y, y)
    assert 0.0 <= loss <= -np.log(1.0 - CLAMP_EPS) * 1.001


def test_coin_flip_prediction_is_log_two():
    p = np.full(11, 0.5)
    y = np.array([1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1], dtype=float)
    loss, _ = bce_loss(p, y)
    assert loss == pytest.approx(np.log(2.0), rel=1e-12)


def test_loss_nonnegative_random():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = rng.uniform(0.01, 0.99, size=11)
        y = rng.integers(0, 2, size=11)
        loss, _ = bce_loss(p, y)
        assert loss >= 0.0


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    p = rng.uniform(0.05, 0.95, size=11)
    y = rng.integers(0, 2, size=11).astype(float)
    _, grad = bce_loss(p, y)
    fd = numeric_gradient(lambda v: bce_loss(v, y)[0], p, step=1e-6)
    assert relative_error(grad, fd) < 1e-6


def test_batched_call_equals_mean_of_clip_losses():
    rng = np.random.default_rng(2)
    p = rng.uniform(0.05, 0.95, size=(4, 11))
    y = rng.integers(0, 2, size=(4, 11))
    batched, grad = bce_loss(p, y)
    per_clip = [bce_loss(p[i], y[i])[0] for i in range(4)]
    assert batched == pytest.approx(np.mean(per_clip), rel=1e-12)
    assert grad.shape == (4, 11)


def test_rejects_non_binary_targets():
    with pytest.raises(ValueError, match="binary"):
        bce_loss(np.full(11, 0.5), np.full(11, 0.3))


def test_rejects_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        bce_loss(np.full(11, 0.5), np.zeros(10))
