"""Sparse linear solvers: basis pursuit denoising and reference baselines.

``solve_bpdn`` computes  min ||c||_1  subject to  ||A c - b||_2 <= sigma  by
root-finding on the Pareto curve phi(tau) = ||A c_tau - b||_2 - sigma, where
c_tau solves the l1-constrained least-squares (LASSO) subproblem at radius
tau.  The curve is convex and non-increasing with derivative
-||A^T r||_inf / ||r||_2 at the subproblem solution, so Newton updates

    tau <- max(0, tau + ||r|| (||r|| - sigma) / ||A^T r||_inf)

approach the root from the left without overshooting; each subproblem is
solved by a spectral projected-gradient iteration warm-started from the
previous solution.

The baselines (minimum-norm least squares, sequential thresholded least
squares, support re-fit) are deliberately thin wrappers over numpy's
rank-revealing ``lstsq``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class BpdnConfig:
    """Iteration limits and tolerances for the BPDN solver.

    ``tol_residual`` is relative to the data norm: the outer iteration stops
    when the residual norm is within ``tol_residual * ||b||`` of the target
    residual (sigma, floored at 1e-8 ||b||).  Anchoring the window to ||b||
    rather than sigma keeps the criterion attainable in double precision when
    sigma is tiny.  ``tol_gap`` bounds the relative duality gap of each LASSO
    subproblem.
    """

    max_outer: int = 40
    max_inner: int = 10_000
    tol_residual: float = 1e-6
    tol_gap: float = 1e-9

    def __post_init__(self):
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration limits must be >= 1")
        if self.tol_residual <= 0 or self.tol_gap <= 0:
            raise ValueError("tolerances must be > 0")


@dataclass
class LassoResult:
    c: np.ndarray
    rnorm: float
    gnorm: float
    gap: float
    iterations: int
    converged: bool


@dataclass
class BpdnResult:
    c: np.ndarray
    rnorm: float
    tau: float
    outer_iterations: int
    inner_iterations: int
    converged: bool


def project_l1_ball(v, tau):
    """Euclidean projection of v onto the l1 ball of radius tau.

    Soft-thresholds at the level theta determined from the sorted magnitudes
    (O(N log N)); entries keep their signs, and the projection is exact:
    either v is inside the ball (returned unchanged) or the result has l1
    norm tau.
    """
    if tau < 0:
        raise ValueError(f"need tau >= 0, got {tau}")
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= tau:
        return v.copy()
    if tau == 0:
        return np.zeros_like(v)
    u = np.sort(a)[::-1]
    cumsum = np.cumsum(u) - tau
    k = np.arange(1, u.size + 1)
    feasible = u > cumsum / k
    rho = np.nonzero(feasible)[0][-1]
    theta = cumsum[rho] / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


_STEP_MIN = 1e-16
_STEP_MAX = 1e5
_HIST = 3  # nonmonotone line-search memory
_LS_GAMMA = 1e-4
# enough halvings that a failed search means stationarity, not a bad scale
_LS_TRIES = 40


class _LassoState:
    """Iterate bundle for the projected-gradient LASSO solve."""

    __slots__ = ("c", "r", "g", "f", "rnorm", "gnorm", "gap", "rgap")

    def __init__(self, A, b, tau, c):
        self.c = c
        self.r = b - A @ c
        self.g = -(A.T @ self.r)
        self.f = 0.5 * float(self.r @ self.r)
        self.rnorm = float(np.sqrt(2.0 * self.f))
        self.gnorm = float(np.linalg.norm(self.g, np.inf))
        self.gap = float(self.r @ (self.r - b)) + tau * self.gnorm
        self.rgap = abs(self.gap) / max(1.0, self.f)


_STALL_WINDOW = 25
_STALL_IMPROVEMENT = 0.99  # gap must shrink by >1% within the window
_GOAL_GAP = 1e-6  # near-optimality required before an rnorm_goal early exit


def solve_lasso(A, b, tau, cfg=None, c0=None, rnorm_goal=None):
    """min 0.5 ||A c - b||^2  subject to  ||c||_1 <= tau  (projected gradient).

    Spectral (Barzilai-Borwein) step sizes with a nonmonotone backtracking
    line search along the projection arc.  Convergence is declared when the
    relative duality gap drops below ``cfg.tol_gap``; the gap of a feasible c
    with residual r = b - A c is  r.(r - b) + tau ||A^T r||_inf  >= 0.  The
    iteration also stops once the gap stalls at the working-precision floor
    (which on large problems can sit above very tight tolerances), or, when
    ``rnorm_goal = (target, atol)`` is given, as soon as the residual norm
    reaches target + atol (the caller's overall stopping criterion) at a
    near-optimal iterate; the gap requirement keeps transient iterates that
    merely cross the residual level from being returned.

    Returns a LassoResult; ``gnorm`` is ||A^T r||_inf at the solution, the
    quantity that doubles as the Pareto-curve derivative scale.
    """
    cfg = cfg or BpdnConfig()
    if tau < 0:
        raise ValueError(f"need tau >= 0, got {tau}")
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    N = A.shape[1]
    c = np.zeros(N) if c0 is None else project_l1_ball(np.asarray(c0, dtype=float), tau)
    st = _LassoState(A, b, tau, c)
    bnorm = float(np.linalg.norm(b))
    rnorm_floor = 1e-12 * max(1.0, bnorm)
    f_hist = [st.f]
    # Cauchy step of the unconstrained quadratic: right order of magnitude
    # whether the iterate is cold (zero) or warm-started near a solution
    Ag = A @ st.g
    gtg = float(st.g @ st.g)
    gAAg = float(Ag @ Ag)
    step = 1.0 if gAAg <= 0 else min(_STEP_MAX, max(_STEP_MIN, gtg / gAAg))
    iterations = 0
    gap_mark = abs(st.gap)
    mark_age = 0

    def done(s):
        if s.rgap <= cfg.tol_gap or s.rnorm <= rnorm_floor:
            return True
        if (
            rnorm_goal is not None
            and s.rnorm <= rnorm_goal[0] + rnorm_goal[1]
            and s.rgap <= max(cfg.tol_gap, _GOAL_GAP)
        ):
            return True
        return False

    while not done(st) and iterations < cfg.max_inner:
        iterations += 1
        f_max = max(f_hist)
        alpha = step
        accepted = False
        for _ in range(_LS_TRIES):
            c_new = project_l1_ball(st.c - alpha * st.g, tau)
            d = c_new - st.c
            gtd = float(st.g @ d)
            r_new = b - A @ c_new
            f_new = 0.5 * float(r_new @ r_new)
            if gtd < 0 and f_new <= f_max + _LS_GAMMA * gtd:
                accepted = True
                break
            alpha /= 2.0
        if not accepted:
            break  # stationary (or no descent at working precision)
        s = c_new - st.c
        g_new = -(A.T @ r_new)
        y = g_new - st.g
        sts = float(s @ s)
        sty = float(s @ y)
        st.c, st.r, st.g, st.f = c_new, r_new, g_new, f_new
        st.rnorm = float(np.sqrt(2.0 * f_new))
        st.gnorm = float(np.linalg.norm(g_new, np.inf))
        st.gap = float(r_new @ (r_new - b)) + tau * st.gnorm
        st.rgap = abs(st.gap) / max(1.0, st.f)
        f_hist.append(st.f)
        if len(f_hist) > _HIST:
            f_hist.pop(0)
        step = _STEP_MAX if sty <= 0 else min(_STEP_MAX, max(_STEP_MIN, sts / sty))
        if sts <= 1e-30 * max(1.0, float(st.c @ st.c)):
            break  # machine-tiny steps
        if abs(st.gap) < _STALL_IMPROVEMENT * gap_mark:
            gap_mark = abs(st.gap)
            mark_age = 0
        else:
            mark_age += 1
            if mark_age >= _STALL_WINDOW:
                break  # gap has hit its working-precision floor

    return LassoResult(
        c=st.c,
        rnorm=st.rnorm,
        gnorm=st.gnorm,
        gap=st.gap,
        iterations=iterations,
        converged=done(st),
    )


def solve_bpdn(A, b, sigma, cfg=None):
    """min ||c||_1  subject to  ||A c - b||_2 <= sigma  (Pareto root-finding).

    Newton iteration on the Pareto curve (see module docstring), warm-starting
    each LASSO subproblem from the previous solution.  On convergence the
    solution satisfies ||A c - b|| <= sigma + tol_residual * ||b||.  With
    sigma = 0 the target residual is floored at 1e-8 ||b|| and the result is
    the basis pursuit interpolator when b is in the range of A; if it is not,
    the residual cannot reach the floor and the result carries
    ``converged=False``.
    """
    cfg = cfg or BpdnConfig()
    if sigma < 0:
        raise ValueError(f"need sigma >= 0, got {sigma}")
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or b.shape != (A.shape[0],):
        raise ValueError("A must be 2-D with b matching its row count")
    N = A.shape[1]
    bnorm = float(np.linalg.norm(b))
    if bnorm <= sigma or bnorm == 0.0:
        return BpdnResult(
            c=np.zeros(N), rnorm=bnorm, tau=0.0, outer_iterations=0,
            inner_iterations=0, converged=True,
        )
    target = max(sigma, 1e-8 * bnorm)
    atol = cfg.tol_residual * bnorm
    tau = 0.0
    c = np.zeros(N)
    rnorm = bnorm
    gnorm = float(np.linalg.norm(A.T @ b, np.inf))
    inner_total = 0
    outer = 0

    def at_root():
        return rnorm <= target + atol

    while outer < cfg.max_outer and not at_root() and gnorm > 0:
        outer += 1
        tau_new = max(0.0, tau + rnorm * (rnorm - target) / gnorm)
        if tau_new == tau:
            break
        tau = tau_new
        res = solve_lasso(A, b, tau, cfg, c0=c, rnorm_goal=(target, atol))
        c, rnorm, gnorm = res.c, res.rnorm, res.gnorm
        inner_total += res.iterations
    return BpdnResult(
        c=c, rnorm=rnorm, tau=tau, outer_iterations=outer,
        inner_iterations=inner_total, converged=at_root(),
    )


def min_norm_least_squares(A, b):
    """Least-squares solution of minimum Euclidean norm (rank-revealing)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c, _, _, _ = np.linalg.lstsq(A, b, rcond=None)
    return c


def sequential_threshold_ls(A, b, lam, max_iters=20):
    """Least squares with repeated hard thresholding at level lam.

    Columns whose coefficient magnitude falls below lam are removed and the
    remaining system re-solved, until the active set is stable (or empty, in
    which case the zero vector is returned).  Inactive entries are exactly 0.
    """
    if lam < 0:
        raise ValueError(f"need lam >= 0, got {lam}")
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    N = A.shape[1]
    active = np.arange(N)
    c = np.zeros(N)
    for _ in range(max_iters):
        if active.size == 0:
            return np.zeros(N)
        sol = min_norm_least_squares(A[:, active], b)
        keep = np.abs(sol) >= lam
        c = np.zeros(N)
        c[active] = np.where(keep, sol, 0.0)
        if keep.all():
            break
        active = active[keep]
    return c


def debias(A_restricted, b):
    """Plain least squares on a support-restricted dictionary.

    Returns (coefficients, full_rank) where ``full_rank`` is False when the
    restricted matrix is column-rank-deficient (the minimum-norm solution is
    still returned).
    """
    A_restricted = np.asarray(A_restricted, dtype=float)
    b = np.asarray(b, dtype=float)
    c, _, rank, _ = np.linalg.lstsq(A_restricted, b, rcond=None)
    return c, bool(rank == A_restricted.shape[1])


def support_of(c, tau_supp=0.0):
    """Indices with |c_i| > tau_supp * ||c||_inf (all nonzeros when tau_supp=0)."""
    if tau_supp < 0:
        raise ValueError(f"need tau_supp >= 0, got {tau_supp}")
    c = np.asarray(c, dtype=float)
    cmax = float(np.linalg.norm(c, np.inf)) if c.size else 0.0
    if cmax == 0.0:
        return np.array([], dtype=np.int64)
    return np.nonzero(np.abs(c) > tau_supp * cmax)[0].astype(np.int64)
