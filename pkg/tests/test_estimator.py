"""Tests for the scikit-learn style estimator facade."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from dynrec.basis import num_columns
from dynrec.dynamics import (
    EXACT_OBSERVED,
    SystemSpec,
    generate_bursts,
    lorenz96_rhs,
    true_model,
)
from dynrec.estimator import SparseDynamicsRegressor

SYS8 = SystemSpec.lorenz96(8)
TRUTH = true_model(SYS8)


@pytest.fixture(scope="module")
def burst_blocks():
    bursts = generate_bursts(SYS8, 60, 5, 1e-3, velocity_mode=EXACT_OBSERVED, seed=1)
    return [b.states for b in bursts], [b.velocities for b in bursts]


def test_fit_with_supplied_velocities(burst_blocks):
    blocks, vels = burst_blocks
    est = SparseDynamicsRegressor().fit(blocks, vels)
    assert est.coef_.shape == (8, num_columns(8))
    assert est.n_features_in_ == 8
    for j in range(8):
        np.testing.assert_array_equal(
            est.supports_[j], np.nonzero(TRUTH.column(j))[0]
        )
    X = np.vstack(blocks)
    pred = est.predict(X)
    true_v = lorenz96_rhs(X)
    assert np.linalg.norm(pred - true_v) <= 1e-2 * np.linalg.norm(true_v)


def test_fit_with_differenced_velocities(burst_blocks):
    blocks, _ = burst_blocks
    est = SparseDynamicsRegressor(dt=1e-3).fit(blocks)
    for j in range(8):
        np.testing.assert_array_equal(
            est.supports_[j], np.nonzero(TRUTH.column(j))[0]
        )


def test_fit_a_single_trajectory_array():
    b = generate_bursts(SYS8, 1, 300, 0.05, velocity_mode=EXACT_OBSERVED, seed=2)[0]
    est = SparseDynamicsRegressor(components=[2]).fit(b.states, b.velocities)
    np.testing.assert_array_equal(est.supports_[2], np.nonzero(TRUTH.column(2))[0])
    assert list(est.results_) == [2]
    # unfitted components stay zero
    assert np.all(est.coef_[0] == 0)


def test_clone_and_params_round_trip():
    est = SparseDynamicsRegressor(dt=0.01, tau_supp=2e-3, components=(1, 2))
    params = est.get_params()
    assert params["dt"] == 0.01 and params["tau_supp"] == 2e-3
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(tau_supp=5e-3)
    assert est.get_params()["tau_supp"] == 5e-3


def test_predict_before_fit_raises():
    with pytest.raises(NotFittedError):
        SparseDynamicsRegressor().predict(np.zeros((3, 8)))


def test_fit_input_validation(burst_blocks):
    blocks, vels = burst_blocks
    with pytest.raises(ValueError):
        SparseDynamicsRegressor().fit(blocks)  # no dt, no velocities
    with pytest.raises(ValueError):
        SparseDynamicsRegressor(dt=1e-3).fit([blocks[0][:2]])  # 2 samples
    with pytest.raises(ValueError):
        SparseDynamicsRegressor().fit(blocks, vels[:-1])  # misaligned
    with pytest.raises(ValueError):
        SparseDynamicsRegressor(components=[8]).fit(blocks, vels)


def test_predict_input_validation(burst_blocks):
    blocks, vels = burst_blocks
    est = SparseDynamicsRegressor(components=[0]).fit(blocks, vels)
    with pytest.raises(ValueError):
        est.predict(np.zeros((3, 5)))
    with pytest.raises(ValueError):
        est.predict(np.zeros(8))
