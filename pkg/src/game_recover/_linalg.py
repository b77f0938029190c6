"""Small shared linear-algebra helpers."""

from __future__ import annotations

import numpy as np


def dominant_eigenvalue(m: np.ndarray, tol: float = 1e-12,
                        max_iter: int = 10_000) -> float:
    """Largest real eigenvalue of `m` by power iteration on ``m + I``.

    Valid whenever the spectral radius of `m` is itself a real nonnegative
    eigenvalue (entrywise-nonnegative matrices, symmetric PSD matrices):
    the +I shift makes that eigenvalue strictly dominant in modulus, which
    keeps the iteration convergent even when other eigenvalues tie the
    spectral radius in absolute value.  Deterministic all-ones start.
    """
    m = np.asarray(m, dtype=float)
    dim = m.shape[0]
    if dim == 0:
        return 0.0
    v = np.full(dim, 1.0 / np.sqrt(dim))
    z = m @ v + v
    theta = float(v @ z)
    for _ in range(max_iter):
        resid = float(np.linalg.norm(z - theta * v))
        if resid <= tol * max(abs(theta), np.finfo(float).tiny):
            break
        norm_z = float(np.linalg.norm(z))
        if norm_z == 0.0:
            return 0.0
        v = z / norm_z
        z = m @ v + v
        theta = float(v @ z)
    return max(theta - 1.0, 0.0)
