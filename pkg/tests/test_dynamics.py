"""Test systems, the adaptive integrator, and burst generation."""

import numpy as np
import pytest

from dynrec.basis import num_columns, position_of
from dynrec.dynamics import (
    EXACT_OBSERVED,
    FINE_STEP_FD,
    FINITE_DIFFERENCE,
    Burst,
    IntegrationFailure,
    InvalidSystemError,
    QuadraticModel,
    SystemSpec,
    fisher_rhs,
    generate_bursts,
    integrate_path,
    integrate_rk45,
    lorenz96_rhs,
    quadratic_rhs,
    true_model,
)


def test_lorenz96_rhs_componentwise():
    n = 6
    x = np.array([0.3, -1.2, 0.8, 2.0, -0.5, 1.1])
    v = lorenz96_rhs(x, F=8.0)
    for k in range(n):
        expected = (
            (x[(k + 1) % n] - x[(k - 2) % n]) * x[(k - 1) % n] - x[k] + 8.0
        )
        assert np.isclose(v[k], expected)


def test_lorenz96_needs_more_than_three_components():
    with pytest.raises(InvalidSystemError):
        lorenz96_rhs(np.zeros(3))
    with pytest.raises(InvalidSystemError):
        SystemSpec.lorenz96(3)


def test_fisher_rhs_componentwise():
    n = 5
    gamma = 0.3
    x = np.array([0.1, 0.9, 0.4, -0.2, 0.6])
    v = fisher_rhs(x, gamma)
    for k in range(n):
        diffusion = x[(k + 1) % n] - 2 * x[k] + x[(k - 1) % n]
        reaction = gamma * (x[k] - x[k] ** 2)
        assert np.isclose(v[k], diffusion + reaction)


def test_fisher_rhs_is_linear_at_gamma_zero():
    rng = np.random.default_rng(0)
    x, y = rng.standard_normal((2, 7))
    lhs = fisher_rhs(x + 2.5 * y, 0.0)
    rhs = fisher_rhs(x, 0.0) + 2.5 * fisher_rhs(y, 0.0)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


@pytest.mark.parametrize(
    "spec",
    [SystemSpec.lorenz96(9, F=8.0), SystemSpec.fisher(9, gamma=0.25)],
    ids=["lorenz96", "fisher"],
)
def test_true_model_matches_the_vector_field(spec):
    rng = np.random.default_rng(1)
    model = true_model(spec)
    X = rng.uniform(-2, 2, (20, spec.n))
    np.testing.assert_allclose(
        quadratic_rhs(model, X), spec.rhs()(X), rtol=1e-12, atol=1e-12
    )


def test_true_model_positions_lorenz96():
    n = 50
    j = 9
    model = true_model(SystemSpec.lorenz96(n, F=8.0))
    c = model.column(j)
    expected = {
        0: 8.0,
        position_of(n, ("lin", j)): -1.0,
        position_of(n, ("quad", 7, 8)): -1.0,
        position_of(n, ("quad", 8, 10)): 1.0,
    }
    assert expected == {int(p): float(c[p]) for p in np.flatnonzero(c)}
    # anchor the flattened positions themselves
    np.testing.assert_array_equal(np.flatnonzero(c), [0, 10, 381, 425])


def test_true_model_positions_fisher():
    n = 200
    model = true_model(SystemSpec.fisher(n, gamma=0.1))
    c = model.column(0)
    np.testing.assert_array_equal(np.flatnonzero(c), [1, 2, 200, 201])
    assert np.isclose(c[1], -1.9)
    assert np.isclose(c[201], -0.1)
    # the squared term drops out of the linear system
    c0 = true_model(SystemSpec.fisher(n, gamma=0.0)).column(0)
    np.testing.assert_array_equal(np.flatnonzero(c0), [1, 2, 200])


def test_quadratic_model_validates_shape_and_frame():
    with pytest.raises(InvalidSystemError):
        QuadraticModel(n=2, coeffs=np.zeros((5, 2)))
    with pytest.raises(InvalidSystemError):
        QuadraticModel(n=2, coeffs=np.zeros((6, 2)), basis="fourier")
    model = QuadraticModel(n=2, coeffs=np.zeros((6, 2)), basis="legendre")
    with pytest.raises(InvalidSystemError):
        quadratic_rhs(model, np.zeros(2))


def test_custom_system_round_trip():
    # dx/dt = -x as a custom quadratic model in one variable
    model = QuadraticModel(n=1, coeffs=np.array([[0.0], [-1.0], [0.0]]))
    spec = SystemSpec.custom(model)
    out = integrate_rk45(spec.rhs(), np.array([2.0]), 0.0, 0.25, 5)
    expected = 2.0 * np.exp(-0.25 * np.arange(5))
    np.testing.assert_allclose(out[:, 0], expected, rtol=1e-8)
    with pytest.raises(InvalidSystemError):
        SystemSpec(kind="custom", n=2, model=model)


def test_integrator_on_harmonic_oscillator():
    def rhs(x):
        return np.array([x[1], -x[0]])

    m, dt = 61, 0.1
    out = integrate_rk45(rhs, np.array([1.0, 0.0]), 0.0, dt, m, tol=1e-10)
    t = dt * np.arange(m)
    np.testing.assert_allclose(out[:, 0], np.cos(t), atol=1e-8)
    np.testing.assert_allclose(out[:, 1], -np.sin(t), atol=1e-8)


def test_integrator_tolerance_actually_tightens():
    def rhs(x):
        return np.array([x[1], -x[0]])

    errs = []
    for tol in (1e-5, 1e-9):
        out = integrate_rk45(rhs, np.array([1.0, 0.0]), 0.0, 0.5, 21, tol=tol)
        errs.append(np.abs(out[:, 0] - np.cos(0.5 * np.arange(21))).max())
    assert errs[1] < errs[0] / 10


def test_integrate_path_runs_backward():
    out = integrate_path(lambda x: -x, np.array([1.0]), 0.0, [-0.5, -1.0])
    np.testing.assert_allclose(out[:, 0], [np.exp(0.5), np.exp(1.0)], rtol=1e-8)


def test_integrator_input_validation():
    rhs = lambda x: -x
    with pytest.raises(ValueError):
        integrate_rk45(rhs, np.array([1.0]), 0.0, -0.1, 5)
    with pytest.raises(ValueError):
        integrate_rk45(rhs, np.array([1.0]), 0.0, 0.1, 0)
    with pytest.raises(ValueError):
        integrate_rk45(rhs, np.array([[1.0]]), 0.0, 0.1, 5)


def test_finite_time_blowup_raises():
    # dx/dt = x^2 from x0 = 2 escapes at t = 0.5
    model = QuadraticModel(n=1, coeffs=np.array([[0.0], [0.0], [1.0]]))
    spec = SystemSpec.custom(model)
    with pytest.raises(IntegrationFailure) as ei:
        integrate_rk45(spec.rhs(), np.array([2.0]), 0.0, 0.1, 8)
    assert ei.value.t_last == pytest.approx(0.5, abs=0.05)


def test_generate_bursts_is_deterministic_and_extendable():
    spec = SystemSpec.lorenz96(6, F=8.0)
    a = generate_bursts(spec, K=4, m=3, dt=0.01, seed=7)
    b = generate_bursts(spec, K=4, m=3, dt=0.01, seed=7)
    c = generate_bursts(spec, K=6, m=3, dt=0.01, seed=7)
    for k in range(4):
        np.testing.assert_array_equal(a[k].states, b[k].states)
        np.testing.assert_array_equal(a[k].states, c[k].states)
    d = generate_bursts(spec, K=4, m=3, dt=0.01, seed=8)
    assert not np.array_equal(a[0].states, d[0].states)


def test_generate_bursts_initial_box():
    spec = SystemSpec.fisher(5, gamma=0.1)
    bursts = generate_bursts(spec, K=20, m=1, dt=0.01, init_box=(0.25, 0.75), seed=0)
    starts = np.vstack([b.states[0] for b in bursts])
    assert starts.min() >= 0.25 and starts.max() <= 0.75


def test_velocity_modes():
    spec = SystemSpec.lorenz96(6, F=8.0)
    exact = generate_bursts(spec, K=2, m=3, dt=0.01, velocity_mode=EXACT_OBSERVED, seed=1)
    for b in exact:
        np.testing.assert_allclose(b.velocities, lorenz96_rhs(b.states, F=8.0), rtol=1e-12)
        assert b.velocity_errors is None
    fd = generate_bursts(spec, K=2, m=3, dt=0.01, velocity_mode=FINITE_DIFFERENCE, seed=1)
    assert all(b.velocities is None for b in fd)
    np.testing.assert_array_equal(exact[0].states, fd[0].states)


def test_fine_step_velocities_and_error_estimates():
    spec = SystemSpec.lorenz96(8, F=8.0)
    (b,) = generate_bursts(
        spec, K=1, m=4, dt=0.5, velocity_mode=FINE_STEP_FD, dt_fine=0.01, seed=2
    )
    v_true = lorenz96_rhs(b.states, F=8.0)
    actual = np.linalg.norm(b.velocities - v_true)
    estimate = np.linalg.norm(b.velocity_errors)
    assert b.velocity_errors.shape == b.states.shape
    assert np.all(b.velocity_errors >= 0)
    # Richardson comparison tracks the real error closely on a smooth flow
    assert 0.5 < estimate / actual < 2.0


def test_fine_step_error_is_second_order_in_dt_fine():
    spec = SystemSpec.lorenz96(8, F=8.0)
    errs = []
    for df in (0.02, 0.01, 0.005):
        (b,) = generate_bursts(
            spec, K=1, m=3, dt=0.5, velocity_mode=FINE_STEP_FD, dt_fine=df, seed=2
        )
        errs.append(np.linalg.norm(b.velocities - lorenz96_rhs(b.states, F=8.0)))
    assert 3.5 < errs[0] / errs[1] < 4.5
    assert 3.5 < errs[1] / errs[2] < 4.5


def test_generate_bursts_validation():
    spec = SystemSpec.lorenz96(6, F=8.0)
    with pytest.raises(ValueError):
        generate_bursts(spec, K=0, m=3, dt=0.01)
    with pytest.raises(ValueError):
        generate_bursts(spec, K=1, m=3, dt=0.01, velocity_mode="spectral")
    with pytest.raises(ValueError):
        generate_bursts(spec, K=1, m=3, dt=0.01, init_box=(1.0, 1.0))
    with pytest.raises(ValueError):
        generate_bursts(spec, K=1, m=3, dt=0.01, velocity_mode=FINE_STEP_FD, dt_fine=0.02)


def test_burst_shape_validation():
    states = np.zeros((3, 2))
    with pytest.raises(ValueError):
        Burst(k=0, t0=0.0, dt=0.1, m=4, states=states, velocities=None,
              velocity_source=FINITE_DIFFERENCE)
    with pytest.raises(ValueError):
        Burst(k=0, t0=0.0, dt=0.1, m=3, states=states, velocities=np.zeros((2, 2)),
              velocity_source=EXACT_OBSERVED)
    with pytest.raises(ValueError):
        Burst(k=0, t0=0.0, dt=0.1, m=3, states=states, velocities=states,
              velocity_source="guessed")


def test_true_model_custom_copies_coefficients():
    model = QuadraticModel(n=1, coeffs=np.array([[1.0], [0.5], [0.0]]))
    spec = SystemSpec.custom(model)
    out = true_model(spec)
    out.coeffs[0, 0] = 99.0
    assert model.coeffs[0, 0] == 1.0
    assert num_columns(out.n) == out.coeffs.shape[0]
