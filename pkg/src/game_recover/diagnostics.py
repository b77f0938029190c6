"""Finite-sample and population diagnostics for the recovery conditions.

Everything here is a checkable quantity: second-moment matrices of the
observed (or exact) joint actions with one player removed, the incoherence
norm between non-neighbor and neighbor coordinates, minimum eigenvalues of
the support restriction, and empirical moment-generating-function checks
for the concentration behavior the analysis relies on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .block_norms import RowBlockMatrix, norm_b_inf_1, norm_b_inf_f, norm_inf_2
from .equilibrium_sampler import NoiseSpec, SampleBatch, perturb, sample_equilibria
from .errors import InvalidInputError
from .game_model import GraphicalGame, in_neighbors

SUBEXP_LAMBDA_LIMIT = 0.25   # MGF bound below only holds for |lambda| <= 1/4
SUBEXP_MGF_RATE = 16.0       # bound is exp(16 * lambda^2)


def reduced_positions(i: int, n: int, k: int, players) -> np.ndarray:
    """Coordinate indices of `players` inside the space with player i removed."""
    idx = []
    for j in sorted(players):
        if j == i:
            raise InvalidInputError("player i has no coordinates in its own reduction")
        pos = j if j < i else j - 1
        idx.extend(range(pos * k, (pos + 1) * k))
    return np.asarray(idx, dtype=int)


def empirical_h(batch: SampleBatch, i: int) -> np.ndarray:
    """(1/T) sum_t x_others x_others^T for player i, from observed actions."""
    xm = batch.others(i)
    return xm.T @ xm / batch.t


def population_h(exact_batch: SampleBatch, i: int, sigma: float) -> np.ndarray:
    """Second moment of the exact equilibria plus sigma^2 on the diagonal."""
    if exact_batch.kind != "exact":
        raise InvalidInputError("population_h expects an exact batch")
    if not (sigma > 0):
        raise InvalidInputError(f"sigma must be positive, got {sigma}")
    h = empirical_h(exact_batch, i)
    return h + sigma ** 2 * np.eye(h.shape[0])


@dataclass(frozen=True)
class IncoherenceResult:
    """Incoherence norm ||H_ScS H_SS^-1||_{B,inf,1} and its margin 1 - norm."""

    norm: float
    alpha: float
    singular: bool
    cond: float


def sample_incoherence(h: np.ndarray, neighbors, i: int, n: int,
                       k: int) -> IncoherenceResult:
    """Incoherence of an (n-1)k x (n-1)k second-moment matrix w.r.t. a support.

    The restricted product is treated as a row-partitioned block matrix
    with k rows per non-neighbor player.  A singular support restriction
    is flagged and reported as an infinite norm.
    """
    neighbors = set(neighbors)
    others = [j for j in range(n) if j != i]
    non_neighbors = [j for j in others if j not in neighbors]
    if not neighbors or not non_neighbors:
        return IncoherenceResult(norm=0.0, alpha=1.0, singular=False, cond=1.0)

    s_idx = reduced_positions(i, n, k, neighbors)
    sc_idx = reduced_positions(i, n, k, non_neighbors)
    h_ss = h[np.ix_(s_idx, s_idx)]
    h_scs = h[np.ix_(sc_idx, s_idx)]
    try:
        cf = scipy.linalg.cho_factor(h_ss)
    except scipy.linalg.LinAlgError:
        return IncoherenceResult(norm=float("inf"), alpha=float("-inf"),
                                 singular=True, cond=float("inf"))
    m = scipy.linalg.cho_solve(cf, h_scs.T).T
    eigs = np.linalg.eigvalsh(h_ss)
    cond = float(eigs[-1] / eigs[0]) if eigs[0] > 0 else float("inf")
    norm = norm_b_inf_1(RowBlockMatrix(m, (k,) * len(non_neighbors)))
    return IncoherenceResult(norm=norm, alpha=1.0 - norm, singular=False, cond=cond)


def support_min_eigenvalue(h: np.ndarray, neighbors, i: int, n: int,
                           k: int) -> float:
    """Minimum eigenvalue of the support restriction; inf for empty supports."""
    neighbors = set(neighbors)
    if not neighbors:
        return float("inf")
    s_idx = reduced_positions(i, n, k, neighbors)
    return float(np.linalg.eigvalsh(h[np.ix_(s_idx, s_idx)])[0])


@dataclass(frozen=True)
class PlayerDiagnostics:
    c_min_empirical: float
    alpha_empirical: float
    m_norm: float
    singular: bool


@dataclass(frozen=True)
class DiagnosticsReport:
    sigma: float
    t: int
    players: dict[int, PlayerDiagnostics]

    def to_json_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "T": self.t,
            "players": {
                str(i): {
                    "c_min_empirical": p.c_min_empirical,
                    "alpha_empirical": p.alpha_empirical,
                    "m_norm": p.m_norm,
                    "singular": p.singular,
                }
                for i, p in sorted(self.players.items())
            },
        }


def diagnostics_report(game: GraphicalGame, batch: SampleBatch,
                       sigma: float) -> DiagnosticsReport:
    """Per-player empirical incoherence and minimum-eigenvalue diagnostics."""
    players = {}
    for i in range(game.n):
        h = empirical_h(batch, i)
        nb = in_neighbors(game, i)
        inc = sample_incoherence(h, nb, i, game.n, game.k)
        players[i] = PlayerDiagnostics(
            c_min_empirical=support_min_eigenvalue(h, nb, i, game.n, game.k),
            alpha_empirical=inc.alpha,
            m_norm=inc.norm,
            singular=inc.singular,
        )
    return DiagnosticsReport(sigma=sigma, t=batch.t, players=players)


def save_diagnostics(report: DiagnosticsReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def concentration_scalars(game: GraphicalGame, exact_batch: SampleBatch,
                          perturbed_batch: SampleBatch, i: int) -> dict[str, float]:
    """Norms of the empirical noise-interaction terms for player i.

    These are the quantities whose concentration drives the recovery
    analysis; they are exposed for plotting against T, with no bound
    asserted.  Supports may be empty, in which case the corresponding
    scalar is 0.
    """
    nb = sorted(in_neighbors(game, i))
    others = [j for j in range(game.n) if j != i]
    non_nb = [j for j in others if j not in nb]
    xm = perturbed_batch.others(i)
    em = perturbed_batch.others(i) - exact_batch.others(i)
    e_i = perturbed_batch.player(i) - exact_batch.player(i)
    t = perturbed_batch.t
    xe = xm.T @ em / t

    w_star = np.zeros(((game.n - 1) * game.k, game.k))
    for j in nb:
        pos = j if j < i else j - 1
        w_star[pos * game.k:(pos + 1) * game.k] = game.blocks[(i, j)].T

    out = {"xe_support_weighted": 0.0, "xe_support_self": 0.0,
           "xe_nonsupport_weighted": 0.0, "xe_nonsupport_self": 0.0}
    if nb:
        s_idx = reduced_positions(i, game.n, game.k, nb)
        w_s = w_star[s_idx]
        out["xe_support_weighted"] = norm_inf_2(
            xe[np.ix_(s_idx, s_idx)] @ w_s)
        out["xe_support_self"] = norm_inf_2(xm[:, s_idx].T @ e_i / t)
    if non_nb:
        sc_idx = reduced_positions(i, game.n, game.k, non_nb)
        part = (game.k,) * len(non_nb)
        out["xe_nonsupport_self"] = norm_b_inf_f(
            RowBlockMatrix(xm[:, sc_idx].T @ e_i / t, part))
        if nb:
            out["xe_nonsupport_weighted"] = norm_b_inf_f(
                RowBlockMatrix(xe[np.ix_(sc_idx, s_idx)] @ w_s, part))
    return out


def check_lemma1(game: GraphicalGame, sigma: float, t: int, trials: int,
                 seed: int, scale: float = 0.8) -> float:
    """Fraction of regenerated noisy batches whose support restrictions stay
    well-conditioned: min over players of eigmin(H_hat_SS) >= sigma^2 / 2."""
    from .equilibrium_sampler import equilibrium_basis

    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    basis = equilibrium_basis(game)
    noise = NoiseSpec("gaussian", sigma)
    children = np.random.SeedSequence(seed).spawn(trials)
    successes = 0
    for child in children:
        s_exact, s_noise = child.generate_state(2, dtype=np.uint64)
        exact = sample_equilibria(game, basis, t, int(s_exact), scale=scale)
        noisy = perturb(exact, noise, int(s_noise))
        ok = True
        for i in range(game.n):
            nb = in_neighbors(game, i)
            if not nb:
                continue
            h = empirical_h(noisy, i)
            if support_min_eigenvalue(h, nb, i, game.n, game.k) < sigma ** 2 / 2:
                ok = False
                break
        successes += ok
    return successes / trials


def check_subexponential(family: str, lambda_grid, t: int, trials: int,
                         seed: int) -> list[dict]:
    """Empirical MGF of centered squares / products of standard normals.

    For each lambda in the grid (|lambda| <= 1/4), estimates
    E[exp(lambda*(y^2 - 1))] for family "square" or E[exp(lambda*p*q)] for
    family "product" from trials * t draws, and reports it against the
    exp(16*lambda^2) envelope.
    """
    if family not in ("square", "product"):
        raise InvalidInputError(f"family must be square|product, got {family!r}")
    if t < 1 or trials < 1:
        raise InvalidInputError("t and trials must be >= 1")
    lambdas = [float(l) for l in lambda_grid]
    for lam in lambdas:
        if abs(lam) > SUBEXP_LAMBDA_LIMIT:
            raise InvalidInputError(
                f"lambda {lam} outside the validity range |lambda| <= 1/4")
    rng = np.random.default_rng(seed)
    sums = np.zeros(len(lambdas))
    for _ in range(trials):
        if family == "square":
            var = rng.standard_normal(t) ** 2 - 1.0
        else:
            var = rng.standard_normal(t) * rng.standard_normal(t)
        for idx, lam in enumerate(lambdas):
            sums[idx] += float(np.exp(lam * var).mean())
    rows = []
    for idx, lam in enumerate(lambdas):
        mgf = sums[idx] / trials
        bound = float(np.exp(SUBEXP_MGF_RATE * lam ** 2))
        rows.append({"family": family, "lambda": lam, "mgf": mgf,
                     "bound": bound, "margin": bound - mgf})
    return rows
