"""Shared test utilities: independent re-implementations used as oracles.

Everything here is deliberately written differently from the package code
(explicit loops, scipy where the package uses handwritten routines) so the
tests cross-check rather than mirror the implementation.
"""

import math

import numpy as np


def brute_b_inf_f(a: np.ndarray, partition) -> float:
    """Max block Frobenius norm by explicit slicing."""
    out, start = 0.0, 0
    for rows in partition:
        blk = a[start:start + rows]
        out = max(out, math.sqrt(float((blk ** 2).sum())))
        start += rows
    return out


def brute_b_inf_1(a: np.ndarray, partition) -> float:
    out, start = 0.0, 0
    for rows in partition:
        out = max(out, float(np.abs(a[start:start + rows]).sum()))
        start += rows
    return out


def brute_inf_2(a: np.ndarray) -> float:
    return max(float(np.sqrt((row ** 2).sum())) for row in a)


def brute_inf_inf(a: np.ndarray) -> float:
    return max(float(np.abs(row).sum()) for row in a)


def random_partition(rng, rows: int, max_block: int = 3):
    """A random composition of `rows` into parts of size 1..max_block."""
    parts = []
    left = rows
    while left > 0:
        take = int(rng.integers(1, min(max_block, left) + 1))
        parts.append(take)
        left -= take
    return tuple(parts)


def loss_value(batch, i, w_stacked, lam):
    """Objective computed the slow way, straight from the sample sums."""
    t = batch.t
    k = batch.k
    total = 0.0
    for s in range(t):
        pred = w_stacked.T @ batch.others(i)[s]
        r = batch.player(i)[s] - pred
        total += float(r @ r)
    total /= t
    for b in range(w_stacked.shape[0] // k):
        total += lam * float(np.linalg.norm(w_stacked[b * k:(b + 1) * k]))
    return total


def lambda_threshold_reference(k, s, sc, t, sigma, b, alpha, w_max, w_min):
    """Second, independently written evaluation of the penalty threshold."""
    ln = math.log
    sq = math.sqrt
    ratio = (1 - alpha) / alpha
    terms = [
        24 * sq(2) * ratio * sigma * b * w_max * sq(k * s * ln(2 * k ** 2 * s) / t),
        192 * ratio * sigma ** 2 * w_max * sq(k * ln(k ** 2 * s) / t),
        192 * ratio * sigma ** 2 * sq(k) * w_max
        * sq(w_max * s * ln(s * k) / (t * w_min)),
        192 * ratio * k ** (1 / 4) * sigma * sq(ln(2 * k ** 2 * s) / t),
        24 * sq(2) / alpha * k * sigma * b * w_max
        * sq(abs(sc * ln(2 * k ** 2 * sc)) / t),
        192 / alpha * sigma ** 2 * k * w_max * sq(ln(k ** 2 * sc) / t),
        192 / alpha * sigma ** 2 * k * w_max
        * sq(w_max * sc ** (1 / 2) * ln(sc * k) / t),
        24 * sq(2) / alpha * k * sigma * b * sq(ln(2 * k ** 2 * sc) / t),
        192 / alpha * sigma * sq(k * ln(2 * k ** 2 * sc) / t),
        24 * (1 - alpha) * sigma ** 2 * sq(k) * w_max / alpha,
        24 * sigma ** 2 * k * w_max / alpha,
    ]
    return max(terms)


def delta_reference(k, s, c_min, alpha, lam, sigma, w_max):
    """Second evaluation of the parameter-error radius."""
    pref = k * math.sqrt(k * s) * 2 / c_min
    a = alpha * lam / (24 * (1 - alpha))
    inner = alpha * lam / (24 * (1 - alpha) * sigma ** 2 * math.sqrt(k) * w_max)
    first = pref * (a + sigma ** 2 * (1 + inner + inner) * math.sqrt(k) * w_max)
    second = pref * (a + a)
    third = lam / 2 * pref
    return first + second + third


def make_random_instance(rng, n, k, t, data_scale=0.5):
    """A small perturbed batch with i.i.d. Gaussian entries (no game needed)."""
    from game_recover import NoiseSpec, SampleBatch

    data = data_scale * rng.standard_normal((t, n * k))
    return SampleBatch(data=data, n=n, k=k, kind="perturbed", seed=0,
                       noise=NoiseSpec("gaussian", data_scale))
