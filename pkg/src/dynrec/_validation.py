"""Small input-validation helpers shared by the estimator and the pipeline."""

from __future__ import annotations

import numpy as np


def as_float_matrix(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={X.ndim}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite entries")
    return X


def as_burst_list(X, name="X"):
    """Normalize a (R, n) array or a sequence of (m, n) arrays to a list of blocks."""
    if isinstance(X, np.ndarray) and X.ndim == 2:
        return [as_float_matrix(X, name)]
    if isinstance(X, np.ndarray):
        raise ValueError(f"{name} must be a 2-D array or a sequence of 2-D arrays")
    blocks = [as_float_matrix(b, f"{name}[{i}]") for i, b in enumerate(X)]
    if not blocks:
        raise ValueError(f"{name} must contain at least one block")
    n = blocks[0].shape[1]
    for i, b in enumerate(blocks):
        if b.shape[1] != n:
            raise ValueError(
                f"{name}[{i}] has {b.shape[1]} columns, expected {n} (consistent across blocks)"
            )
    return blocks


def check_aligned_blocks(X_blocks, V, name="x_dot"):
    """Normalize velocities to blocks aligned with the state blocks."""
    if isinstance(V, np.ndarray) and V.ndim == 2 and len(X_blocks) == 1:
        V_blocks = [as_float_matrix(V, name)]
    else:
        V_blocks = as_burst_list(V, name)
    if len(V_blocks) != len(X_blocks):
        raise ValueError(f"{name} must have as many blocks as X")
    for i, (xb, vb) in enumerate(zip(X_blocks, V_blocks)):
        if vb.shape != xb.shape:
            raise ValueError(
                f"{name}[{i}] shape {vb.shape} does not match X[{i}] shape {xb.shape}"
            )
    return V_blocks
