"""Finite differencing, calibrated noise, and error metrics."""

import numpy as np
import pytest

from dynrec.differentiation import (
    NoiseSpec,
    add_state_noise,
    fd_velocity,
    noise_ratio,
    rel_l2,
)


def _fd_errors(dt):
    m = int(round(2.0 / dt)) + 1
    t = 0.5 + np.arange(m) * dt
    v = fd_velocity(np.sin(t)[:, None], dt)
    err = np.abs(v[:, 0] - np.cos(t))
    return err[1:-1].max(), max(err[0], err[-1])


def test_fd_velocity_orders_on_sin():
    # central stencils inside (second order), one-sided at the ends (first)
    i1, e1 = _fd_errors(0.02)
    i2, e2 = _fd_errors(0.01)
    assert abs(np.log2(i1 / i2) - 2.0) < 0.1
    assert abs(np.log2(e1 / e2) - 1.0) < 0.1


def test_fd_velocity_exact_on_quadratics():
    # a second-order stencil reproduces derivatives of t^2 exactly inside
    dt = 0.1
    t = np.arange(10) * dt
    v = fd_velocity((t * t)[:, None], dt)
    np.testing.assert_allclose(v[1:-1, 0], 2 * t[1:-1], rtol=1e-12)


def test_fd_velocity_first_order_mode():
    dt = 0.25
    t = np.arange(6) * dt
    states = (3.0 * t + 1.0)[:, None]
    v = fd_velocity(states, dt, order=1)
    np.testing.assert_allclose(v[:, 0], 3.0, rtol=1e-12)


def test_fd_velocity_validation():
    with pytest.raises(ValueError):
        fd_velocity(np.zeros((2, 3)), 0.1)
    with pytest.raises(ValueError):
        fd_velocity(np.zeros((5, 3)), 0.0)
    with pytest.raises(ValueError):
        fd_velocity(np.zeros((5, 3)), 0.1, order=4)


def test_add_state_noise_hits_the_ratio_exactly():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((40, 7))
    for ratio in (0.5, 2.5, 7.0):
        Y = add_state_noise(X, NoiseSpec(ratio=ratio, seed=3))
        assert noise_ratio(X, Y) == pytest.approx(ratio, rel=1e-12)


def test_add_state_noise_determinism_and_zero():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((10, 4))
    a = add_state_noise(X, NoiseSpec(ratio=2.0, seed=5))
    b = add_state_noise(X, NoiseSpec(ratio=2.0, seed=5))
    c = add_state_noise(X, NoiseSpec(ratio=2.0, seed=6))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    z = add_state_noise(X, NoiseSpec(ratio=0.0, seed=5))
    np.testing.assert_array_equal(z, X)
    assert z is not X


def test_add_state_noise_rejects_zero_matrix():
    with pytest.raises(ValueError):
        add_state_noise(np.zeros((3, 3)), NoiseSpec(ratio=1.0))
    with pytest.raises(ValueError):
        NoiseSpec(ratio=-1.0)


def test_metrics_are_percentages():
    c = np.array([3.0, 4.0])
    assert rel_l2(1.01 * c, c) == pytest.approx(1.0)
    assert rel_l2(c, c) == 0.0
    X = np.eye(3)
    assert noise_ratio(X, X * 1.02) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        rel_l2(c, np.zeros(2))
    with pytest.raises(ValueError):
        noise_ratio(np.zeros((2, 2)), X[:2, :2])
