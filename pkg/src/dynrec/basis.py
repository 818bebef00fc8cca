"""Quadratic trial-function dictionaries in monomial and Legendre bases.

A quadratic dictionary in n variables has N = (n^2 + 3n + 2) / 2 columns,
ordered as: the constant function, the n linear terms x_1 .. x_n, then the
quadratic terms x_i x_j for i <= j in lexicographic order of (i, j).  All
indices in this module are 0-based; human-facing labels are 1-based.

The Legendre variant is the tensor family orthonormal with respect to the
uniform probability measure on [-1, 1]^n:

    1,  sqrt(3) x_i,  sqrt(5) (3 x_i^2 - 1) / 2,  3 x_i x_j  (i < j).

Its largest magnitude on the cube is 3, attained by the cross terms at the
corners; that uniform bound is what makes the family a bounded orthonormal
system and drives the sampling-complexity behaviour of the recovery pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQRT3 = float(np.sqrt(3.0))
SQRT5 = float(np.sqrt(5.0))

MONOMIAL = "monomial"
LEGENDRE = "legendre"
_BASES = (MONOMIAL, LEGENDRE)


def _check_basis(basis):
    if basis not in _BASES:
        raise ValueError(f"unknown basis {basis!r}; expected one of {_BASES}")


def num_columns(n):
    """Number of quadratic trial functions in n variables: (n^2 + 3n + 2) / 2."""
    n = int(n)
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    return (n * n + 3 * n + 2) // 2


def quad_pairs(n):
    """Index pairs (i, j), i <= j, of the quadratic columns, in column order.

    Returns the two arrays produced by ``np.triu_indices(n)``, whose row-major
    upper-triangular order coincides with the dictionary's lexicographic
    quadratic ordering.
    """
    return np.triu_indices(n)


def position_of(n, term):
    """Column position of a term tuple.

    Terms are ``("const",)``, ``("lin", i)`` or ``("quad", i, j)`` with
    0-based i <= j.
    """
    kind = term[0]
    if kind == "const":
        return 0
    if kind == "lin":
        i = term[1]
        if not 0 <= i < n:
            raise ValueError(f"linear index {i} out of range for n={n}")
        return 1 + i
    if kind == "quad":
        i, j = term[1], term[2]
        if not (0 <= i <= j < n):
            raise ValueError(f"quadratic pair ({i}, {j}) invalid for n={n}")
        # columns before row i: n + (n-1) + ... + (n-i+1) = i*n - i*(i-1)/2
        return 1 + n + i * n - (i * (i - 1)) // 2 + (j - i)
    raise ValueError(f"unknown term kind {kind!r}")


def term_of(n, pos):
    """Inverse of :func:`position_of`: term tuple at a column position."""
    N = num_columns(n)
    pos = int(pos)
    if not 0 <= pos < N:
        raise ValueError(f"position {pos} out of range for n={n} (N={N})")
    if pos == 0:
        return ("const",)
    if pos <= n:
        return ("lin", pos - 1)
    q = pos - (n + 1)
    # row starts of the flattened upper triangle: start(i) = i*n - i*(i-1)/2
    i = int((2 * n + 1 - np.sqrt((2 * n + 1) ** 2 - 8 * q)) // 2)
    while i * n - (i * (i - 1)) // 2 > q:
        i -= 1
    while (i + 1) * n - ((i + 1) * i) // 2 <= q:
        i += 1
    j = i + (q - (i * n - (i * (i - 1)) // 2))
    return ("quad", i, j)


def term_label(term):
    """Human-readable label with 1-based variable numbering."""
    kind = term[0]
    if kind == "const":
        return "1"
    if kind == "lin":
        return f"x{term[1] + 1}"
    i, j = term[1], term[2]
    if i == j:
        return f"x{i + 1}^2"
    return f"x{i + 1}*x{j + 1}"


def _decode_positions(n, positions):
    """Split column positions into const/lin/quad parts (vectorized)."""
    pos = np.asarray(positions, dtype=np.int64)
    if pos.ndim != 1:
        raise ValueError("column positions must be a 1-D sequence")
    N = num_columns(n)
    if pos.size and (pos.min() < 0 or pos.max() >= N):
        raise ValueError(f"column position out of range for n={n}")
    const_mask = pos == 0
    lin_mask = (pos >= 1) & (pos <= n)
    quad_mask = pos > n
    lin_i = pos[lin_mask] - 1
    q = pos[quad_mask] - (n + 1)
    starts = np.arange(n, dtype=np.int64) * n - (np.arange(n, dtype=np.int64) * (np.arange(n) - 1)) // 2
    qi = np.searchsorted(starts, q, side="right") - 1
    qj = qi + (q - starts[qi])
    return const_mask, lin_mask, lin_i, quad_mask, qi, qj


def monomial_row(x):
    """Dictionary row (1, x_1..x_n, x_i x_j for i <= j) at a single point."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be a 1-D point")
    return evaluate_rows(x[None, :], MONOMIAL)[0]


def legendre_row(x):
    """Legendre dictionary row at a single point (tensor family, see module doc)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be a 1-D point")
    return evaluate_rows(x[None, :], LEGENDRE)[0]


def evaluate_rows(X, basis, columns=None):
    """Evaluate dictionary rows at many points.

    Parameters
    ----------
    X : ndarray, shape (R, n)
        Evaluation points, one per row.
    basis : {"monomial", "legendre"}
    columns : sequence of int, optional
        Column positions to evaluate.  Default: all N columns.

    Returns
    -------
    ndarray, shape (R, M)
        M = N or len(columns).
    """
    _check_basis(basis)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-D (rows of points)")
    R, n = X.shape
    if columns is None:
        N = num_columns(n)
        iu, ju = quad_pairs(n)
        out = np.empty((R, N))
        out[:, 0] = 1.0
        out[:, 1 : n + 1] = SQRT3 * X if basis == LEGENDRE else X
        Q = out[:, n + 1 :]
        np.multiply(X[:, iu], X[:, ju], out=Q)
        if basis == LEGENDRE:
            diag = iu == ju
            Q[:, ~diag] *= 3.0
            Q[:, diag] = SQRT5 * (3.0 * Q[:, diag] - 1.0) / 2.0
        return out
    const_mask, lin_mask, lin_i, quad_mask, qi, qj = _decode_positions(n, columns)
    M = const_mask.size
    out = np.empty((R, M))
    out[:, const_mask] = 1.0
    out[:, lin_mask] = SQRT3 * X[:, lin_i] if basis == LEGENDRE else X[:, lin_i]
    Q = X[:, qi] * X[:, qj]
    if basis == LEGENDRE:
        diag = qi == qj
        Q[:, ~diag] *= 3.0
        Q[:, diag] = SQRT5 * (3.0 * Q[:, diag] - 1.0) / 2.0
    out[:, quad_mask] = Q
    return out


def localized_columns(j, ell, n):
    """Column positions of the dictionary localized to a periodic window.

    The window is the ``ell`` coordinates centred on component ``j`` (0-based)
    with periodic wrap-around; ``ell`` must be odd and ``3 <= ell <= n``.  The
    result holds the constant column, the ``ell`` linear columns and every
    quadratic column supported on the window, as sorted global positions;
    its length is (ell^2 + 3 ell + 2) / 2.
    """
    ell = int(ell)
    n = int(n)
    if ell % 2 == 0 or not 3 <= ell <= n:
        raise ValueError(f"window must be odd with 3 <= ell <= n, got ell={ell}, n={n}")
    if not 0 <= j < n:
        raise ValueError(f"component {j} out of range for n={n}")
    half = (ell - 1) // 2
    window = [(j + d) % n for d in range(-half, half + 1)]
    positions = [0] + [position_of(n, ("lin", w)) for w in window]
    for a in range(ell):
        for b in range(a, ell):
            i0, j0 = window[a], window[b]
            lo, hi = (i0, j0) if i0 <= j0 else (j0, i0)
            positions.append(position_of(n, ("quad", lo, hi)))
    positions = np.unique(np.asarray(positions, dtype=np.int64))
    expected = (ell * ell + 3 * ell + 2) // 2
    assert positions.size == expected, (positions.size, expected)
    return positions


@dataclass(frozen=True)
class AffineTransform:
    """Per-coordinate map y_i = a_i x_i + b_i taking a box onto [-1, 1]^n.

    ``lo`` and ``hi`` are the box bounds; a_i = 2 / (hi_i - lo_i) and
    b_i = -(hi_i + lo_i) / (hi_i - lo_i).  ``chain`` is the velocity scaling
    dy_i/dt = a_i dx_i/dt.
    """

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be 1-D arrays of equal length")
        if not np.all(hi > lo):
            raise ValueError("degenerate box: need hi > lo in every coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def n(self):
        return self.lo.size

    @property
    def scale(self):
        return 2.0 / (self.hi - self.lo)

    @property
    def offset(self):
        return -(self.hi + self.lo) / (self.hi - self.lo)

    @property
    def chain(self):
        """Velocity scaling factors, one per coordinate."""
        return self.scale

    def forward(self, X):
        """Map points in the box to [-1, 1]^n."""
        X = np.asarray(X, dtype=float)
        return X * self.scale + self.offset

    def inverse(self, Y):
        Y = np.asarray(Y, dtype=float)
        return (Y - self.offset) / self.scale

    @classmethod
    def identity(cls, n):
        return cls(lo=-np.ones(n), hi=np.ones(n))

    @classmethod
    def from_box(cls, n, lo, hi):
        return cls(lo=np.full(n, float(lo)), hi=np.full(n, float(hi)))

    @classmethod
    def from_data(cls, X):
        """Tightest per-coordinate box around the rows of X."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("X must be a non-empty 2-D data matrix")
        return cls(lo=X.min(axis=0), hi=X.max(axis=0))

    def is_identity(self):
        return bool(np.all(self.lo == -1.0) and np.all(self.hi == 1.0))


def change_basis(c, n, from_basis, to_basis):
    """Re-express a full coefficient vector in the other basis.

    The map is exact: both bases span the same space of quadratics.  Only the
    constant and the squared-term columns mix; linear and cross columns are
    pure rescalings.
    """
    _check_basis(from_basis)
    _check_basis(to_basis)
    c = np.asarray(c, dtype=float)
    N = num_columns(n)
    if c.shape != (N,):
        raise ValueError(f"coefficient vector must have shape ({N},), got {c.shape}")
    if from_basis == to_basis:
        return c.copy()
    iu, ju = quad_pairs(n)
    diag = iu == ju
    out = np.empty_like(c)
    q = c[n + 1 :]
    if from_basis == MONOMIAL:  # -> legendre
        out[0] = c[0] + q[diag].sum() / 3.0
        out[1 : n + 1] = c[1 : n + 1] / SQRT3
        out[n + 1 :] = np.where(diag, q * (2.0 / (3.0 * SQRT5)), q / 3.0)
    else:  # legendre -> monomial
        out[0] = c[0] - (SQRT5 / 2.0) * q[diag].sum()
        out[1 : n + 1] = c[1 : n + 1] * SQRT3
        out[n + 1 :] = np.where(diag, q * (3.0 * SQRT5 / 2.0), q * 3.0)
    return out


def change_basis_matrix(n):
    """Matrix T with legendre_row(x) = monomial_row(x) @ T for every x.

    Equivalently, monomial coefficients of a function are T @ (its legendre
    coefficients).  Intended for testing at small n; it is dense N x N.
    """
    N = num_columns(n)
    iu, ju = quad_pairs(n)
    T = np.zeros((N, N))
    T[0, 0] = 1.0
    for i in range(n):
        T[1 + i, 1 + i] = SQRT3
    for k in range(iu.size):
        pos = n + 1 + k
        if iu[k] == ju[k]:
            T[pos, pos] = 3.0 * SQRT5 / 2.0
            T[0, pos] = -SQRT5 / 2.0
        else:
            T[pos, pos] = 3.0
    return T


def pullback_affine(c, transform, component=None):
    """Rewrite monomial coefficients of dy_j/dt = g(y) for the original frame.

    Given g with y = a x + b (per-coordinate), substitutes y into g and divides
    by the chain factor a_j of the recovered component, so the result f
    satisfies dx_j/dt = f(x).  ``component`` is the 0-based j; it may be
    omitted when the transform is uniform across coordinates.
    """
    c = np.asarray(c, dtype=float)
    n = transform.n
    N = num_columns(n)
    if c.shape != (N,):
        raise ValueError(f"coefficient vector must have shape ({N},), got {c.shape}")
    a = transform.scale
    b = transform.offset
    if component is None:
        if not (np.allclose(a, a[0]) and np.allclose(b, b[0])):
            raise ValueError("component required for a non-uniform transform")
        alpha = a[0]
    else:
        if not 0 <= component < n:
            raise ValueError(f"component {component} out of range for n={n}")
        alpha = a[component]
    iu, ju = quad_pairs(n)
    q = c[n + 1 :]
    lin = c[1 : n + 1]
    out = np.zeros(N)
    out[0] = c[0] + lin @ b + q @ (b[iu] * b[ju])
    lin_acc = lin * a
    np.add.at(lin_acc, iu, q * a[iu] * b[ju])
    np.add.at(lin_acc, ju, q * a[ju] * b[iu])
    out[1 : n + 1] = lin_acc
    out[n + 1 :] = q * a[iu] * a[ju]
    out /= alpha
    return out


@dataclass
class DictionaryMatrix:
    """Assembled dictionary: row r = basis functions at sample r.

    ``states`` keeps the (frame-transformed) sample points the rows were
    evaluated at, so later stages (support re-fit in the other basis) can
    build restricted matrices without re-integrating anything.  ``rows_meta``
    maps row r to its (burst index, sample index).
    """

    values: np.ndarray
    basis: str
    n: int
    columns: np.ndarray | None
    rows_meta: np.ndarray
    frame: str
    transform: AffineTransform | None
    states: np.ndarray

    @property
    def shape(self):
        return self.values.shape

    def column_positions(self):
        if self.columns is not None:
            return self.columns
        return np.arange(num_columns(self.n), dtype=np.int64)


ALL_SAMPLES = "all-samples"
INITIAL_ONLY = "initial-only"


def assemble_dictionary(bursts, basis, columns=None, rows=ALL_SAMPLES, transform=None):
    """Stack dictionary rows (and aligned velocities) from burst data.

    Parameters
    ----------
    bursts : sequence of Burst
        Each must carry states (m, n) and velocities (m, n); consistent n.
    basis : {"monomial", "legendre"}
    columns : sequence of int, optional
        Restrict to these column positions (localized recovery).
    rows : {"all-samples", "initial-only"}
        "all-samples" uses every sample of every burst, burst-major then
        sample-major; "initial-only" uses only each burst's first sample.
    transform : AffineTransform, optional
        Applied to the states before evaluation; velocities are scaled by the
        per-coordinate chain factors.

    Returns
    -------
    (DictionaryMatrix, ndarray)
        The dictionary and the (R, n) velocity matrix in the same frame.
    """
    _check_basis(basis)
    if rows not in (ALL_SAMPLES, INITIAL_ONLY):
        raise ValueError(f"unknown row mode {rows!r}")
    if len(bursts) == 0:
        raise ValueError("need at least one burst")
    n = bursts[0].states.shape[1]
    xs, vs, meta = [], [], []
    for k, b in enumerate(bursts):
        if b.states.ndim != 2 or b.states.shape[1] != n:
            raise ValueError(f"burst {k}: inconsistent state dimension")
        if b.velocities is None or b.velocities.shape != b.states.shape:
            raise ValueError(f"burst {k}: velocities missing or misshapen")
        take = 1 if rows == INITIAL_ONLY else b.states.shape[0]
        xs.append(b.states[:take])
        vs.append(b.velocities[:take])
        meta.append(np.stack([np.full(take, k), np.arange(take)], axis=1))
    X = np.vstack(xs)
    V = np.vstack(vs)
    rows_meta = np.vstack(meta).astype(np.int64)
    if transform is not None:
        if transform.n != n:
            raise ValueError("transform dimension does not match the data")
        X = transform.forward(X)
        V = V * transform.chain[None, :]
        frame = "unit-box"
    else:
        frame = "original"
    values = evaluate_rows(X, basis, columns=columns)
    cols = None if columns is None else np.asarray(columns, dtype=np.int64)
    mat = DictionaryMatrix(
        values=values,
        basis=basis,
        n=n,
        columns=cols,
        rows_meta=rows_meta,
        frame=frame,
        transform=transform,
        states=X,
    )
    return mat, V
