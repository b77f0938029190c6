"""Independent projected-subgradient oracle for the blockwise-sparse fit.

This is the reference optimizer the solver is checked against: plain
projected subgradient descent with the strongly-convex step schedule
2/(mu*(t+2)), tracking both the best visited objective and the objective of
the running weighted-average iterate.  It shares nothing with the package
solver beyond the problem data.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _run(h, c, y_ss, lam, k, iters, mu, radius):
    m, kc = c.shape
    nblocks = m // k
    w = np.zeros((m, kc))
    wavg = np.zeros((m, kc))
    weight_sum = 0.0
    best = 1e300

    for t in range(iters):
        hw = h @ w
        pen = 0.0
        for b in range(nblocks):
            sq = 0.0
            for r in range(b * k, (b + 1) * k):
                for q in range(kc):
                    sq += w[r, q] * w[r, q]
            pen += np.sqrt(sq)
        dot_cw = 0.0
        dot_whw = 0.0
        for r in range(m):
            for q in range(kc):
                dot_cw += c[r, q] * w[r, q]
                dot_whw += w[r, q] * hw[r, q]
        obj = y_ss - 2.0 * dot_cw + dot_whw + lam * pen
        if obj < best:
            best = obj

        g = 2.0 * (hw - c)
        for b in range(nblocks):
            sq = 0.0
            for r in range(b * k, (b + 1) * k):
                for q in range(kc):
                    sq += w[r, q] * w[r, q]
            norm_b = np.sqrt(sq)
            if norm_b > 0.0:
                for r in range(b * k, (b + 1) * k):
                    for q in range(kc):
                        g[r, q] += lam * w[r, q] / norm_b

        if mu > 0.0:
            step = 2.0 / (mu * (t + 2.0))
        else:
            step = 0.1 / np.sqrt(t + 1.0)
        frob = 0.0
        for r in range(m):
            for q in range(kc):
                w[r, q] -= step * g[r, q]
                frob += w[r, q] * w[r, q]
        frob = np.sqrt(frob)
        if frob > radius:
            shrink = radius / frob
            for r in range(m):
                for q in range(kc):
                    w[r, q] *= shrink

        wt = t + 1.0
        weight_sum += wt
        for r in range(m):
            for q in range(kc):
                wavg[r, q] += wt * (w[r, q] - wavg[r, q]) / weight_sum

    hw = h @ wavg
    pen = 0.0
    for b in range(nblocks):
        sq = 0.0
        for r in range(b * k, (b + 1) * k):
            for q in range(kc):
                sq += wavg[r, q] * wavg[r, q]
        pen += np.sqrt(sq)
    dot_cw = 0.0
    dot_whw = 0.0
    for r in range(m):
        for q in range(kc):
            dot_cw += c[r, q] * wavg[r, q]
            dot_whw += wavg[r, q] * hw[r, q]
    obj_avg = y_ss - 2.0 * dot_cw + dot_whw + lam * pen
    return min(best, obj_avg)


def subgradient_objective(batch, i, lam, iters=1_000_000):
    """Best objective value found by the projected-subgradient reference run."""
    xm = batch.others(i)
    y = batch.player(i)
    t = batch.t
    h = np.ascontiguousarray(xm.T @ xm / t)
    c = np.ascontiguousarray(xm.T @ y / t)
    y_ss = float((y * y).sum()) / t
    eigs = np.linalg.eigvalsh(h)
    mu = 2.0 * float(eigs[0]) if eigs[0] > 1e-12 else 0.0

    # any minimizer lies in this ball: at lam > 0 the penalty alone is at
    # most the zero objective; otherwise use the least-squares solution norm
    if lam > 0:
        radius = y_ss / lam + 1.0
    else:
        radius = 10.0 * float(np.linalg.norm(np.linalg.pinv(h) @ c)) + 1.0
    return float(_run(h, c, y_ss, lam, batch.k, iters, mu, radius))
