"""Tests for the recovery pipeline: burst preparation, residual bounds,
component recovery, and the burst-count helpers.

The small Lorenz 96 instance (n = 8, 45 dictionary columns) keeps the
end-to-end cases fast while exercising the same code paths as the large
experiments.
"""

import dataclasses

import numpy as np
import pytest

from dynrec.basis import INITIAL_ONLY, localized_columns, num_columns
from dynrec.differentiation import NoiseSpec, fd_velocity, noise_ratio
from dynrec.dynamics import EXACT_OBSERVED, SystemSpec, generate_bursts, true_model
from dynrec.recovery import (
    LOCALIZED,
    SINGLE_TRAJECTORY,
    RecoveryConfig,
    evaluate_success,
    fd_sigma,
    min_bursts_for_component,
    prepare_bursts,
    recover_component,
    recover_system,
    required_bursts,
    resolve_sigma,
    success_probability,
    trial_seed,
)

SYS8 = SystemSpec.lorenz96(8)


def exact_cfg(**kw):
    base = dict(system=SYS8, K=60, m=5, dt=1e-3, velocity_mode=EXACT_OBSERVED, seed=1)
    base.update(kw)
    return RecoveryConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        RecoveryConfig(system=SYS8, strategy="bogus")
    with pytest.raises(ValueError):
        RecoveryConfig(system=SYS8, strategy=LOCALIZED)  # needs window
    with pytest.raises(ValueError):
        RecoveryConfig(system=SYS8, strategy=SINGLE_TRAJECTORY, K=7)
    with pytest.raises(ValueError):
        RecoveryConfig(system=SYS8, rows="everything")
    with pytest.raises(ValueError):
        RecoveryConfig(system=SYS8, tau_supp=-0.1)
    with pytest.raises(ValueError):
        RecoveryConfig(system=SYS8, sigma="tight")
    with pytest.raises(ValueError):
        RecoveryConfig(system=SYS8, sigma=-1.0)
    with pytest.raises(ValueError):
        RecoveryConfig(system=SYS8, m=2)  # differencing needs m >= 3


def test_prepare_bursts_fills_differenced_velocities():
    cfg = RecoveryConfig(system=SYS8, K=4, m=5, dt=1e-3, seed=5)
    bursts = prepare_bursts(cfg)
    assert len(bursts) == 4
    for b in bursts:
        np.testing.assert_array_equal(b.velocities, fd_velocity(b.states, b.dt))


def test_prepare_bursts_noise_hits_both_channels():
    cfg = RecoveryConfig(
        system=SYS8, K=6, m=5, dt=1e-3, velocity_mode=EXACT_OBSERVED,
        seed=5, noise=NoiseSpec(ratio=5.0, seed=11),
    )
    clean = prepare_bursts(dataclasses.replace(cfg, noise=None))
    noisy = prepare_bursts(cfg)
    X = np.vstack([b.states for b in clean])
    V = np.vstack([b.velocities for b in clean])
    Y = np.vstack([b.states for b in noisy])
    W = np.vstack([b.velocities for b in noisy])
    assert noise_ratio(X, Y) == pytest.approx(5.0, rel=1e-12)
    assert noise_ratio(V, W) == pytest.approx(5.0, rel=1e-12)
    # independent draws per channel
    assert not np.allclose((Y - X) / np.linalg.norm(X), (W - V) / np.linalg.norm(V))

    again = prepare_bursts(cfg)
    for a, b in zip(noisy, again):
        np.testing.assert_array_equal(a.states, b.states)
        np.testing.assert_array_equal(a.velocities, b.velocities)


def test_fd_sigma_tracks_the_true_stencil_error():
    bursts = generate_bursts(SYS8, 30, 5, 1e-3, velocity_mode=EXACT_OBSERVED, seed=7)
    cfg = RecoveryConfig(system=SYS8, K=30, m=5, dt=1e-3, fit_box="none")
    rss = 0.0
    for b in bursts:
        err = fd_velocity(b.states, b.dt)[:, 2] - b.velocities[:, 2]
        rss += float(err @ err)
    rss = np.sqrt(rss)
    est = fd_sigma(bursts, cfg, None, 2)
    assert 0.5 <= est / rss <= 2.0


def test_resolve_sigma_passthrough_and_exact_mode():
    bursts = generate_bursts(SYS8, 3, 5, 1e-3, velocity_mode=EXACT_OBSERVED, seed=0)
    v = np.vstack([b.velocities for b in bursts])[:, 0]
    cfg = exact_cfg(sigma=0.123)
    assert resolve_sigma(cfg, bursts, v, None, 0) == 0.123
    cfg = exact_cfg()
    assert resolve_sigma(cfg, bursts, v, None, 0) == pytest.approx(
        1e-8 * np.linalg.norm(v)
    )


def test_recover_component_requires_a_sigma():
    from dynrec.basis import assemble_dictionary

    bursts = generate_bursts(SYS8, 3, 5, 1e-3, velocity_mode=EXACT_OBSERVED, seed=0)
    A, V = assemble_dictionary(bursts, "legendre", transform=None)
    with pytest.raises(ValueError):
        recover_component(A, V[:, 0], exact_cfg(), 0)


def test_exact_velocities_recover_every_component():
    res = recover_system(exact_cfg())
    assert res.success
    truth = true_model(SYS8)
    for j in range(8):
        r = res.components[j]
        assert r.converged
        np.testing.assert_array_equal(r.support, np.nonzero(truth.column(j))[0])
        assert r.rel_l2 < 1.0  # percent
    C = res.coefficient_matrix()
    assert C.shape == (num_columns(8), 8)
    np.testing.assert_array_equal(C[:, 3], res.components[3].coeffs)


def test_recovery_is_frame_invariant():
    ra = recover_system(exact_cfg(fit_box=(-1.5, 1.5)), components=[3])
    rb = recover_system(exact_cfg(fit_box="none"), components=[3])
    a, b = ra.components[3], rb.components[3]
    np.testing.assert_array_equal(a.support, b.support)
    np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-8)


def test_localized_matches_full_recovery():
    fsys = SystemSpec.fisher(30, 0.1)
    base = dict(system=fsys, K=40, m=5, dt=1e-4, velocity_mode=EXACT_OBSERVED, seed=2)
    loc = recover_system(
        RecoveryConfig(strategy=LOCALIZED, window=11, **base), components=[0]
    )
    full = recover_system(RecoveryConfig(**base), components=[0])
    a, b = loc.components[0], full.components[0]
    assert a.success and b.success
    cols = set(localized_columns(0, 11, 30).tolist())
    assert set(a.support.tolist()) <= cols
    np.testing.assert_array_equal(a.support, b.support)
    np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-8)


def test_initial_rows_only():
    cfg = exact_cfg(K=150, rows=INITIAL_ONLY, seed=3)
    res = recover_system(cfg, components=[2])
    assert res.rows == 150  # one row per burst
    assert res.components[2].success


def test_trial_seed_determinism():
    assert trial_seed(0, 1, 2) == trial_seed(0, 1, 2)
    seen = {trial_seed(0, k, t) for k in range(4) for t in range(4)}
    assert len(seen) == 16
    assert trial_seed(1, 0) != trial_seed(0, 0)


def test_success_probability_extremes():
    assert success_probability(exact_cfg(), 1, trials=3) == 1.0
    assert success_probability(exact_cfg(K=2), 1, trials=3) == 0.0


def test_min_bursts_scan():
    cfg = exact_cfg(seed=4)
    k = min_bursts_for_component(cfg, 0, 5, 40, trials=2)
    assert isinstance(k, int) and 5 <= k <= 40
    assert min_bursts_for_component(cfg, 0, 2, 3, trials=2) is None


def test_required_bursts_anchors():
    assert required_bursts(5, 20301) == 159
    assert required_bursts(5, num_columns(100)) == 137
    assert required_bursts(5, 1326, eps=0.1, mode="theoretical") == 2384
    assert required_bursts(5, 1326, eps=1.0, mode="theoretical") == 0


def test_required_bursts_validation():
    with pytest.raises(ValueError):
        required_bursts(0, 100)
    with pytest.raises(ValueError):
        required_bursts(5, 1)
    with pytest.raises(ValueError):
        required_bursts(5, 100, mode="theoretical")  # eps missing
    with pytest.raises(ValueError):
        required_bursts(5, 100, eps=0.0, mode="theoretical")
    with pytest.raises(ValueError):
        required_bursts(5, 100, c=0.0)
    with pytest.raises(ValueError):
        required_bursts(5, 100, mode="exhaustive")


def test_evaluate_success_cases():
    c_true = np.zeros(10)
    c_true[[0, 4]] = [2.0, -1.0]
    assert evaluate_success(c_true.copy(), c_true)
    assert evaluate_success(1.005 * c_true, c_true)  # 0.5% error
    assert not evaluate_success(1.02 * c_true, c_true)  # 2% error
    wrong = c_true.copy()
    wrong[7] = 0.5
    assert not evaluate_success(wrong, c_true)


def test_noisy_recovery_is_deterministic():
    cfg = RecoveryConfig(
        system=SYS8, K=80, m=5, dt=1e-3, velocity_mode=EXACT_OBSERVED,
        seed=9, noise=NoiseSpec(ratio=2.0, seed=3),
    )
    r1 = recover_system(cfg, components=[1])
    r2 = recover_system(cfg, components=[1])
    np.testing.assert_array_equal(r1.components[1].coeffs, r2.components[1].coeffs)
    assert r1.components[1].sigma == r2.components[1].sigma
