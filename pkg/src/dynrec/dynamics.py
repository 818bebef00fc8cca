"""Test systems, quadratic vector fields, adaptive integration, burst sampling.

Burst data are short trajectories (m samples, spacing dt) started from random
initial points; the recovery pipeline consumes many such bursts.  Sampling is
deterministic given a seed: burst k draws its initial point from an RNG built
on ``SeedSequence(seed, spawn_key=(k,))``, so adding bursts never perturbs
existing ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import basis
from .basis import num_columns, position_of

EXACT_OBSERVED = "exact-observed"
FINITE_DIFFERENCE = "finite-difference"
FINE_STEP_FD = "fine-step-fd"
_VELOCITY_MODES = (EXACT_OBSERVED, FINITE_DIFFERENCE, FINE_STEP_FD)


class InvalidSystemError(ValueError):
    """Raised for malformed system definitions (bad n, bad parameters)."""


class IntegrationFailure(RuntimeError):
    """Adaptive integration could not continue (step size underflow / non-finite state)."""

    def __init__(self, message, t_last):
        super().__init__(message)
        self.t_last = t_last


@dataclass
class QuadraticModel:
    """Coefficients of a quadratic vector field, one column per component.

    ``coeffs`` has shape (N, n) with N = (n^2 + 3n + 2) / 2; column j holds
    the dictionary coefficients of dx_{j+1}/dt in ``basis`` ("monomial" or
    "legendre").  ``frame`` records which coordinates the coefficients refer
    to: "original", or "unit-box" together with the transform that maps the
    original box onto [-1, 1]^n.
    """

    n: int
    coeffs: np.ndarray
    basis: str = basis.MONOMIAL
    frame: str = "original"
    transform: basis.AffineTransform | None = None

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        N = num_columns(self.n)
        if self.coeffs.shape != (N, self.n):
            raise InvalidSystemError(
                f"coefficients must have shape ({N}, {self.n}), got {self.coeffs.shape}"
            )
        if self.basis not in (basis.MONOMIAL, basis.LEGENDRE):
            raise InvalidSystemError(f"unknown basis {self.basis!r}")
        if self.frame not in ("original", "unit-box"):
            raise InvalidSystemError(f"unknown frame {self.frame!r}")

    def column(self, j):
        return self.coeffs[:, j]


def lorenz96_rhs(x, F=8.0):
    """Cyclic advection-damping-forcing system, n > 3 components.

    dx_k/dt = -x_{k-2} x_{k-1} + x_{k-1} x_{k+1} - x_k + F  (indices mod n).
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n <= 3:
        raise InvalidSystemError(f"need n > 3, got n={n}")
    xm1 = np.roll(x, 1, axis=-1)
    xm2 = np.roll(x, 2, axis=-1)
    xp1 = np.roll(x, -1, axis=-1)
    return (xp1 - xm2) * xm1 - x + F


def fisher_rhs(x, gamma):
    """Discrete reaction-diffusion ring with logistic reaction, n >= 3 components.

    dx_k/dt = x_{k+1} - 2 x_k + x_{k-1} + gamma (x_k - x_k^2)  (indices mod n).
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n < 3:
        raise InvalidSystemError(f"need n >= 3, got n={n}")
    return np.roll(x, -1, axis=-1) - 2.0 * x + np.roll(x, 1, axis=-1) + gamma * (x - x * x)


@dataclass(frozen=True)
class SystemSpec:
    """A named test system, or a custom quadratic model.

    ``param`` is the forcing F for "lorenz96" and the reaction rate gamma for
    "fisher"; it is ignored for "custom".
    """

    kind: str
    n: int
    param: float = 0.0
    model: QuadraticModel | None = None

    def __post_init__(self):
        if self.kind == "lorenz96":
            if self.n <= 3:
                raise InvalidSystemError("lorenz96 needs n > 3")
        elif self.kind == "fisher":
            if self.n < 3:
                raise InvalidSystemError("fisher needs n >= 3")
        elif self.kind == "custom":
            if self.model is None:
                raise InvalidSystemError("custom system needs a model")
            if self.model.n != self.n:
                raise InvalidSystemError("model dimension does not match n")
            if self.model.basis != basis.MONOMIAL or self.model.frame != "original":
                raise InvalidSystemError("custom dynamics need monomial original-frame coefficients")
        else:
            raise InvalidSystemError(f"unknown system kind {self.kind!r}")

    @classmethod
    def lorenz96(cls, n, F=8.0):
        return cls(kind="lorenz96", n=n, param=float(F))

    @classmethod
    def fisher(cls, n, gamma):
        return cls(kind="fisher", n=n, param=float(gamma))

    @classmethod
    def custom(cls, model):
        return cls(kind="custom", n=model.n, model=model)

    def rhs(self):
        """Vector field as a callable on 1-D states (rows also accepted)."""
        if self.kind == "lorenz96":
            F = self.param
            return lambda x: lorenz96_rhs(x, F=F)
        if self.kind == "fisher":
            gamma = self.param
            return lambda x: fisher_rhs(x, gamma=gamma)
        model = self.model
        return lambda x: quadratic_rhs(model, x)


def true_model(spec):
    """Exact monomial original-frame coefficients of a system's vector field."""
    n = spec.n
    N = num_columns(n)
    if spec.kind == "custom":
        return QuadraticModel(n=n, coeffs=spec.model.coeffs.copy())
    C = np.zeros((N, n))
    if spec.kind == "lorenz96":
        F = spec.param
        for j in range(n):
            C[0, j] = F
            C[position_of(n, ("lin", j)), j] = -1.0
            a, b = (j - 2) % n, (j - 1) % n
            C[position_of(n, ("quad", min(a, b), max(a, b))), j] += -1.0
            a, b = (j - 1) % n, (j + 1) % n
            C[position_of(n, ("quad", min(a, b), max(a, b))), j] += 1.0
    elif spec.kind == "fisher":
        gamma = spec.param
        for j in range(n):
            C[position_of(n, ("lin", (j + 1) % n)), j] += 1.0
            C[position_of(n, ("lin", j)), j] += -2.0 + gamma
            C[position_of(n, ("lin", (j - 1) % n)), j] += 1.0
            C[position_of(n, ("quad", j, j)), j] += -gamma
    return QuadraticModel(n=n, coeffs=C)


def quadratic_rhs(model, x):
    """Evaluate a monomial original-frame quadratic model at a point (or rows)."""
    if model.basis != basis.MONOMIAL or model.frame != "original":
        raise InvalidSystemError("need monomial original-frame coefficients")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    rows = basis.evaluate_rows(np.atleast_2d(x), basis.MONOMIAL)
    out = rows @ model.coeffs
    return out[0] if single else out


# Dormand-Prince 5(4) pair.  The last b5 stage equals the first stage of the
# next step (FSAL), so an accepted step costs six fresh evaluations.
_DP_A = (
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_DP_E = _DP_B5 - _DP_B4

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_PI_BETA = 0.04
_ERR_EXPO = 0.2 - 0.75 * _PI_BETA


def _error_norm(delta, y0, y1, tol):
    scale = tol + tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((delta / scale) ** 2)))


def _initial_step(f, y0, f0, direction, tol):
    scale = tol + tol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((y0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = f(y1)
    d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def _advance(f, t, y, t_end, h, fsal, tol):
    """Integrate dy/dt = f(y) from t to exactly t_end (either direction).

    Returns (y_end, h_carry, fsal_carry); ``fsal`` is f(y) at entry when
    already available.  Output times are hit by clipping the step, never by
    interpolating.
    """
    direction = 1.0 if t_end >= t else -1.0
    if t_end == t:
        return y, h, fsal
    k1 = f(y) if fsal is None else fsal
    if h is None:
        h = _initial_step(f, y, k1, direction, tol)
    h = abs(h)
    fac_old = 1e-4
    rejected = False
    K = np.empty((7,) + y.shape)
    while direction * (t_end - t) > 0:
        remaining = abs(t_end - t)
        if h < 16 * np.finfo(float).eps * max(1.0, abs(t)):
            raise IntegrationFailure(f"step size underflow at t={t!r}", t_last=t)
        clipped = h >= remaining
        h_step = (remaining if clipped else h) * direction
        K[0] = k1
        for s in range(5):
            K[s + 1] = f(y + h_step * (_DP_A[s] @ K[: s + 1]))
        y_new = y + h_step * (_DP_B5[:6] @ K[:6])
        K[6] = f(y_new)
        err_vec = h_step * (_DP_E @ K)
        err = _error_norm(err_vec, y, y_new, tol)
        if np.isfinite(err) and err <= 1.0:
            t = t_end if clipped else t + h_step
            y = y_new
            k1 = K[6]
            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = _SAFETY * err ** (-_ERR_EXPO) * fac_old ** _PI_BETA
                factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            if rejected:
                factor = min(1.0, factor)
            if not clipped:
                h = h * factor
            fac_old = max(err, 1e-4)
            rejected = False
        else:
            if np.isfinite(err):
                factor = max(_MIN_FACTOR, _SAFETY * err ** (-_ERR_EXPO))
            else:
                factor = _MIN_FACTOR
            h = (abs(h_step) if clipped else h) * factor
            rejected = True
        if not np.all(np.isfinite(y)):
            raise IntegrationFailure(f"non-finite state at t={t!r}", t_last=t)
    return y, h, k1


def integrate_path(rhs, x0, t0, times, tol=1e-9):
    """States at the given monotone output times (t0 and times share direction)."""
    x0 = np.asarray(x0, dtype=float)
    out = np.empty((len(times), x0.size))
    t, y, h, fsal = float(t0), x0, None, None
    for i, t_next in enumerate(times):
        y, h, fsal = _advance(rhs, t, y, float(t_next), h, fsal, tol)
        t = float(t_next)
        out[i] = y
    return out


def integrate_rk45(rhs, x0, t0, dt_out, m, tol=1e-9):
    """Integrate dx/dt = rhs(x) and return m states at spacing dt_out.

    Row i is the state at t0 + i * dt_out (row 0 is x0).  Steps are adapted to
    the error tolerance (atol = rtol = tol, mixed per-component scale) and
    clipped to land on output times exactly.
    """
    if dt_out <= 0:
        raise ValueError(f"need dt_out > 0, got {dt_out}")
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    if tol <= 0:
        raise ValueError(f"need tol > 0, got {tol}")
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim != 1:
        raise ValueError("x0 must be 1-D")
    out = np.empty((m, x0.size))
    out[0] = x0
    if m > 1:
        times = t0 + dt_out * np.arange(1, m)
        out[1:] = integrate_path(rhs, x0, t0, times, tol=tol)
    return out


@dataclass
class Burst:
    """One short trajectory: m samples at spacing dt starting at t0.

    ``velocities`` is None when the velocity mode defers to finite
    differencing of the states downstream.  ``velocity_errors`` carries
    per-row absolute error estimates for the velocities when the producing
    mode can supply them (fine-step differencing does, via Richardson
    extrapolation); downstream residual bounds aggregate them.
    """

    k: int
    t0: float
    dt: float
    m: int
    states: np.ndarray
    velocities: np.ndarray | None
    velocity_source: str
    velocity_errors: np.ndarray | None = None

    def __post_init__(self):
        if self.states.shape[0] != self.m:
            raise ValueError("states row count does not match m")
        if self.velocities is not None and self.velocities.shape != self.states.shape:
            raise ValueError("velocities shape does not match states")
        if self.velocity_errors is not None and self.velocity_errors.shape != self.states.shape:
            raise ValueError("velocity_errors shape does not match states")
        if self.velocity_source not in _VELOCITY_MODES:
            raise ValueError(f"unknown velocity source {self.velocity_source!r}")


def _exact_velocities(rhs, states):
    return np.vstack([rhs(s) for s in states])


def generate_bursts(
    spec,
    K,
    m,
    dt,
    init_box=(-1.0, 1.0),
    velocity_mode=FINITE_DIFFERENCE,
    seed=0,
    tol=1e-9,
    dt_fine=None,
):
    """Simulate K bursts of m samples at spacing dt from random initial points.

    Initial points are uniform on ``init_box`` (per coordinate), drawn from
    per-burst child RNGs of ``seed``.  Velocity modes:

    - "exact-observed": velocities are the true vector field at the samples;
    - "finite-difference": velocities left unfilled (differenced downstream);
    - "fine-step-fd": central differences over an auxiliary pair of states at
      t +- dt_fine around every sample (default dt_fine = dt / 100).

    Raises IntegrationFailure (annotated with the burst index) if any
    trajectory cannot be integrated.
    """
    if K < 1:
        raise ValueError(f"need K >= 1, got {K}")
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    if dt <= 0:
        raise ValueError(f"need dt > 0, got {dt}")
    if velocity_mode not in _VELOCITY_MODES:
        raise ValueError(f"unknown velocity mode {velocity_mode!r}")
    lo, hi = float(init_box[0]), float(init_box[1])
    if not hi > lo:
        raise ValueError(f"empty initial box ({lo}, {hi})")
    if velocity_mode == FINE_STEP_FD:
        dt_fine = dt / 100.0 if dt_fine is None else float(dt_fine)
        if not 0 < dt_fine < dt:
            raise ValueError(f"need 0 < dt_fine < dt, got dt_fine={dt_fine}")
    rhs = spec.rhs()
    bursts = []
    for k in range(K):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))
        x0 = rng.uniform(lo, hi, size=spec.n)
        try:
            states = integrate_rk45(rhs, x0, 0.0, dt, m, tol=tol)
            velocity_errors = None
            if velocity_mode == EXACT_OBSERVED:
                velocities = _exact_velocities(rhs, states)
            elif velocity_mode == FINE_STEP_FD:
                velocities, velocity_errors = _fine_step_velocities(
                    rhs, states, dt, dt_fine, tol
                )
            else:
                velocities = None
        except IntegrationFailure as exc:
            raise IntegrationFailure(
                f"burst {k}: {exc} (t_last={exc.t_last})", t_last=exc.t_last
            ) from exc
        bursts.append(
            Burst(
                k=k,
                t0=0.0,
                dt=dt,
                m=m,
                states=states,
                velocities=velocities,
                velocity_source=velocity_mode,
                velocity_errors=velocity_errors,
            )
        )
    return bursts


def _fine_step_velocities(rhs, states, dt, dt_fine, tol):
    """Central differences (x(t+d) - x(t-d)) / 2d re-integrated around each sample.

    Also integrates to +-2d and Richardson-compares the two central
    differences: v_d = v + c d^2 + O(d^4) and v_2d = v + 4 c d^2 + O(d^4),
    so (v_2d - v_d) / 3 estimates the error of v_d per entry.  Returns
    (velocities, error estimates).
    """
    m = states.shape[0]
    out = np.empty_like(states)
    err = np.empty_like(states)
    for i in range(m):
        t_i = i * dt
        plus = integrate_path(rhs, states[i], t_i, [t_i + dt_fine, t_i + 2.0 * dt_fine], tol=tol)
        minus = integrate_path(rhs, states[i], t_i, [t_i - dt_fine, t_i - 2.0 * dt_fine], tol=tol)
        v1 = (plus[0] - minus[0]) / (2.0 * dt_fine)
        v2 = (plus[1] - minus[1]) / (4.0 * dt_fine)
        out[i] = v1
        err[i] = np.abs(v2 - v1) / 3.0
    return out, err
