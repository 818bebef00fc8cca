"""Scikit-learn style estimator wrapping the sparse recovery pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_burst_list, check_aligned_blocks
from .basis import LEGENDRE, num_columns
from .differentiation import fd_velocity
from .dynamics import (
    EXACT_OBSERVED,
    FINITE_DIFFERENCE,
    Burst,
    QuadraticModel,
    quadratic_rhs,
)
from .recovery import (
    RANDOM_BURSTS,
    RecoveryConfig,
    assemble_dictionary,
    _resolve_transform,
    recover_component,
    resolve_sigma,
)
from .solvers import BpdnConfig


class SparseDynamicsRegressor(RegressorMixin, BaseEstimator):
    """Identify a sparse quadratic vector field from sampled trajectories.

    Fits dx_j/dt = f_j(x) with each f_j a sparse quadratic, by l1 basis
    pursuit denoising over a (Legendre by default) quadratic dictionary
    evaluated on the samples, followed by a least-squares re-fit on the
    detected support.

    Parameters
    ----------
    basis : {"legendre", "monomial"}
        Dictionary used in the sparse solve.
    fit_box : "data", "none" or (lo, hi)
        Affine rescaling of the data into [-1, 1]^n before the solve.
    sigma : "auto" or float
        Residual bound for the denoising constraint.
    tau_supp : float
        Relative magnitude threshold defining the support.
    debias : bool
        Re-fit on the detected support by plain least squares.
    dt : float, optional
        Sample spacing; required when velocities are not supplied to fit.
    window : int, optional
        Odd window size for localized (banded-interaction) recovery.
    components : sequence of int, optional
        0-based subset of components to fit (default: all).
    solver : BpdnConfig, optional

    Attributes
    ----------
    coef_ : ndarray, shape (n, N)
        Row j holds the monomial, original-frame dictionary coefficients of
        component j (N = (n^2 + 3n + 2) / 2).
    model_ : QuadraticModel
    supports_ : dict mapping component -> support positions
    results_ : dict mapping component -> ComponentResult

    Examples
    --------
    >>> est = SparseDynamicsRegressor(dt=0.01)
    >>> est.fit(states)                    # doctest: +SKIP
    >>> est.predict(states)                # doctest: +SKIP
    """

    def __init__(
        self,
        basis=LEGENDRE,
        fit_box="data",
        sigma="auto",
        tau_supp=1e-3,
        debias=True,
        dt=None,
        window=None,
        components=None,
        solver=None,
    ):
        self.basis = basis
        self.fit_box = fit_box
        self.sigma = sigma
        self.tau_supp = tau_supp
        self.debias = debias
        self.dt = dt
        self.window = window
        self.components = components
        self.solver = solver

    def fit(self, X, x_dot=None):
        """Fit from sampled states.

        Parameters
        ----------
        X : ndarray (R, n) or sequence of ndarray (m_k, n)
            One trajectory, or a list of burst blocks sampled at spacing dt.
        x_dot : aligned velocities, optional
            When omitted, velocities are finite-differenced (needs ``dt`` and
            at least 3 samples per block).
        """
        blocks = as_burst_list(X)
        n = blocks[0].shape[1]
        if x_dot is not None:
            vel_blocks = check_aligned_blocks(blocks, x_dot)
            mode = EXACT_OBSERVED
            dt = self.dt if self.dt is not None else 1.0
        else:
            if self.dt is None:
                raise ValueError("dt is required to difference velocities")
            if min(b.shape[0] for b in blocks) < 3:
                raise ValueError("finite differencing needs at least 3 samples per block")
            vel_blocks = [fd_velocity(b, self.dt) for b in blocks]
            mode = FINITE_DIFFERENCE
            dt = self.dt
        bursts = [
            Burst(
                k=k,
                t0=0.0,
                dt=dt,
                m=b.shape[0],
                states=b,
                velocities=v,
                velocity_source=mode,
            )
            for k, (b, v) in enumerate(zip(blocks, vel_blocks))
        ]
        cfg = RecoveryConfig(
            system=None,
            strategy=RANDOM_BURSTS,
            K=len(bursts),
            m=min(b.m for b in bursts),
            dt=dt,
            basis=self.basis,
            window=self.window,
            velocity_mode=mode,
            fit_box=self.fit_box,
            sigma=self.sigma,
            tau_supp=self.tau_supp,
            debias=self.debias,
            solver=self.solver if self.solver is not None else BpdnConfig(),
        )
        components = range(n) if self.components is None else self.components
        components = [int(j) for j in components]
        for j in components:
            if not 0 <= j < n:
                raise ValueError(f"component {j} out of range for n={n}")
        Xall = np.vstack(blocks)
        transform = _resolve_transform(cfg, Xall)
        A, V = assemble_dictionary(bursts, cfg.basis, transform=transform)
        N = num_columns(n)
        coef = np.zeros((n, N))
        results = {}
        for j in components:
            sigma = resolve_sigma(cfg, bursts, V[:, j], transform, j)
            res = recover_component(A, V[:, j], cfg, j, sigma=sigma)
            results[j] = res
            coef[j] = res.coeffs
        self.coef_ = coef
        self.results_ = results
        self.supports_ = {j: r.support for j, r in results.items()}
        self.model_ = QuadraticModel(n=n, coeffs=coef.T)
        self.n_features_in_ = n
        return self

    def predict(self, X):
        """Velocities of the fitted vector field at the given states."""
        check_is_fitted(self, "coef_")
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X must be (R, {self.n_features_in_}), got {X.shape}"
            )
        return quadratic_rhs(self.model_, X)
