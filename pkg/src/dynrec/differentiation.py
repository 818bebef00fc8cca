"""Velocity estimation from sampled states, state noise, error metrics.

Velocities are differenced per burst: second-order central stencils at
interior samples, first-order one-sided stencils at the two ends.  Noise is
added to states (before any differencing), calibrated so the realized
Frobenius-norm ratio hits the requested percentage exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def fd_velocity(states, dt, order=2):
    """Difference a burst's states in time.

    Parameters
    ----------
    states : ndarray, shape (m, n)
        Samples at uniform spacing dt, m >= 3.
    dt : float
    order : {1, 2}
        2 (default): central differences at interior samples, one-sided at the
        ends.  1: forward differences everywhere (backward at the last sample).

    Returns
    -------
    ndarray, shape (m, n)
    """
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[0] < 3:
        raise ValueError("states must be (m, n) with m >= 3")
    if dt <= 0:
        raise ValueError(f"need dt > 0, got {dt}")
    if order == 2:
        # np.gradient with edge_order=1: central interior, one-sided ends
        return np.gradient(states, dt, axis=0, edge_order=1)
    if order == 1:
        v = np.empty_like(states)
        v[:-1] = (states[1:] - states[:-1]) / dt
        v[-1] = (states[-1] - states[-2]) / dt
        return v
    raise ValueError(f"order must be 1 or 2, got {order}")


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian state noise at a fixed Frobenius-ratio percentage."""

    ratio: float
    seed: int = 0

    def __post_init__(self):
        if self.ratio < 0:
            raise ValueError(f"noise ratio must be >= 0, got {self.ratio}")


def add_state_noise(X, spec):
    """Return X plus iid Gaussian noise rescaled to the requested ratio.

    The perturbation is scaled so that ``noise_ratio(X, Y)`` equals
    ``spec.ratio`` (a percentage) exactly, up to floating point.
    """
    X = np.asarray(X, dtype=float)
    if spec.ratio == 0:
        return X.copy()
    norm_X = np.linalg.norm(X)
    if norm_X == 0:
        raise ValueError("cannot scale noise relative to an all-zero data matrix")
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    eta = rng.standard_normal(X.shape)
    eta *= (spec.ratio / 100.0) * norm_X / np.linalg.norm(eta)
    return X + eta


def noise_ratio(X, Y):
    """Frobenius-relative difference of two data matrices, in percent."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    norm_X = np.linalg.norm(X)
    if norm_X == 0:
        raise ValueError("reference matrix has zero norm")
    return 100.0 * np.linalg.norm(Y - X) / norm_X


def rel_l2(c, c_true):
    """Relative l2 coefficient error, in percent."""
    c = np.asarray(c, dtype=float)
    c_true = np.asarray(c_true, dtype=float)
    norm_true = np.linalg.norm(c_true)
    if norm_true == 0:
        raise ValueError("true coefficient vector has zero norm")
    return 100.0 * np.linalg.norm(c - c_true) / norm_true
