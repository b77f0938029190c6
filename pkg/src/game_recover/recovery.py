"""Turning per-player fits into a recovered game and scoring the recovery.

Structure is read directly off the fitted blocks (the proximal step
produces exact zeros, so no threshold is involved).  The error radius
`delta_bound` and the induced approximation level `epsilon_bound` follow
the analysis' printed formulas term by term; containment is checked the
way the analysis proves it: equilibria of the recovered game must be
approximate equilibria of the true game, with the payoff shortfall
controlled by the blockwise parameter error times the budget.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .block_norms import norm_frobenius
from .diagnostics import sample_incoherence, support_min_eigenvalue
from .equilibrium_sampler import SampleBatch, equilibrium_basis, sample_equilibria
from .errors import InvalidInputError, NoEquilibriumError
from .game_model import GraphicalGame, best_response_residual, in_neighbors
from .group_lasso import FitResult


def recover_structure(fits: dict[int, FitResult]) -> set[tuple[int, int]]:
    """Edge set {(i, j)} with a nonzero fitted block; exact, no threshold."""
    edges = set()
    for i, fr in fits.items():
        for j in fr.active_blocks:
            edges.add((i, j))
    return edges


def game_from_fits(fits: dict[int, FitResult], budget: float) -> GraphicalGame:
    """Assemble the recovered game from the nonzero fitted blocks."""
    some = next(iter(fits.values()))
    blocks = {}
    for i, fr in fits.items():
        for j in fr.active_blocks:
            blocks[(i, j)] = fr.game_block(j)
    return GraphicalGame(n=some.n, k=some.k, budget=budget, blocks=blocks)


def delta_bound(k: int, s: int, c_min: float, alpha: float, lam: float,
                sigma: float, w_max: float):
    """Parameter-error radius, evaluated term by term as printed.

    Returns (value, terms) with the three printed summands.  Requires
    alpha strictly inside (0, 1): the correction terms divide by (1-alpha).
    """
    if not (0 < alpha < 1):
        raise InvalidInputError(f"alpha must be in (0, 1), got {alpha}")
    if not (c_min > 0):
        raise InvalidInputError(f"c_min must be positive, got {c_min}")
    for name, val in (("k", k), ("s", s)):
        if not (val > 0):
            raise InvalidInputError(f"{name} must be positive, got {val}")
    if lam < 0 or sigma < 0 or w_max < 0:
        raise InvalidInputError("lam, sigma, w_max must be nonnegative")

    pref = k * np.sqrt(k * s) * 2.0 / c_min
    a = alpha * lam / (24.0 * (1.0 - alpha))
    if sigma > 0 and w_max > 0:
        correction = alpha * lam / (24.0 * (1.0 - alpha) * sigma ** 2
                                    * np.sqrt(k) * w_max)
    else:
        correction = 0.0
    term1 = pref * (a + sigma ** 2 * (1.0 + 2.0 * correction) * np.sqrt(k) * w_max)
    term2 = pref * (a + a)
    term3 = 0.5 * lam * pref
    terms = (float(term1), float(term2), float(term3))
    return float(term1 + term2 + term3), terms


def epsilon_bound(s: int, delta: float, b: float) -> float:
    """Approximation level |S_i| * delta * b induced by the error radius."""
    if s < 0 or delta < 0 or b < 0:
        raise InvalidInputError("inputs must be nonnegative")
    return float(s) * float(delta) * float(b)


def param_error(fits: dict[int, FitResult], game: GraphicalGame) -> dict[int, float]:
    """Per player, the largest Frobenius error over true-support blocks."""
    out = {}
    for i, fr in fits.items():
        worst = 0.0
        for j in in_neighbors(game, i):
            est = fr.game_block(j) if j in fr.active_blocks \
                else np.zeros((game.k, game.k))
            worst = max(worst, norm_frobenius(est - game.blocks[(i, j)]))
        out[i] = worst
    return out


def containment_eps(fits: dict[int, FitResult], game: GraphicalGame) -> dict[int, float]:
    """Per player, sum over edges of the block error norm times the budget.

    The sum runs over the union of true and estimated supports; this is the
    payoff shortfall bound that containment checks against.
    """
    out = {}
    for i, fr in fits.items():
        total = 0.0
        for j in in_neighbors(game, i) | fr.active_blocks:
            est = fr.game_block(j) if j in fr.active_blocks \
                else np.zeros((game.k, game.k))
            true = game.blocks.get((i, j), np.zeros((game.k, game.k)))
            total += norm_frobenius(est - true) * game.budget
        out[i] = total
    return out


def _sample_est_equilibria(est_game: GraphicalGame, n_points: int, seed: int,
                           scale: float) -> np.ndarray:
    """Exact equilibria of the recovered game; the zero point if none exist."""
    try:
        basis = equilibrium_basis(est_game)
        batch = sample_equilibria(est_game, basis, n_points, seed, scale=scale)
        return np.asarray(batch.data)
    except NoEquilibriumError:
        return np.zeros((1, est_game.dim))


def verify_containment(true_game: GraphicalGame, est_game: GraphicalGame,
                       eps: float, n_points: int, seed: int,
                       scale: float = 1.0,
                       players=None) -> float:
    """Fraction of sampled est-game equilibria that are eps-equilibria of
    the true game.  `players` restricts which players' conditions are
    enforced (used to exclude unconverged fits); default is all."""
    if n_points < 1:
        raise InvalidInputError(f"n_points must be >= 1, got {n_points}")
    check = range(true_game.n) if players is None else sorted(players)
    points = _sample_est_equilibria(est_game, n_points, seed, scale)
    good = 0
    for x in points:
        ok = True
        for i in check:
            xi = x[true_game.action_slice(i)]
            if np.linalg.norm(xi) > true_game.budget:
                ok = False
                break
            if best_response_residual(true_game, i, x) > eps:
                ok = False
                break
        good += ok
    return good / len(points)


@dataclass(frozen=True)
class RecoveryReport:
    edges_true: tuple[tuple[int, int], ...]
    edges_est: tuple[tuple[int, int], ...]
    precision: float
    recall: float
    f1: float
    exact_structure: bool
    param_error_per_player: dict[int, float]
    param_error_binf: float
    eps_containment: float
    containment_rate: float
    delta: float | None
    epsilon: float | None
    unconverged_players: tuple[int, ...]

    def to_json_dict(self) -> dict:
        return {
            "edges_true": [list(e) for e in self.edges_true],
            "edges_est": [list(e) for e in self.edges_est],
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "exact_structure": self.exact_structure,
            "param_error": {
                "per_player": {str(i): v for i, v
                               in sorted(self.param_error_per_player.items())},
                "max": self.param_error_binf,
            },
            "eps_containment": self.eps_containment,
            "containment_rate": self.containment_rate,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "unconverged_players": list(self.unconverged_players),
        }


def structure_scores(edges_true: set, edges_est: set) -> tuple[float, float, float]:
    """Precision, recall, F1 of an estimated edge set."""
    tp = len(edges_true & edges_est)
    precision = tp / len(edges_est) if edges_est else 1.0
    recall = tp / len(edges_true) if edges_true else 1.0
    f1 = 0.0 if precision + recall == 0 else \
        2.0 * precision * recall / (precision + recall)
    return precision, recall, f1


def evaluate(true_game: GraphicalGame, fits: dict[int, FitResult],
             exact_batch: SampleBatch | None = None,
             sigma: float | None = None,
             n_points: int = 200, seed: int = 0) -> RecoveryReport:
    """Full recovery scorecard for a set of per-player fits.

    delta/epsilon are evaluated only when an exact batch and sigma are
    supplied (they need the population second-moment quantities) and only
    over players whose incoherence margin lies strictly inside (0, 1);
    otherwise they are None.
    """
    edges_true = true_game.edges()
    edges_est = recover_structure(fits)
    precision, recall, f1 = structure_scores(edges_true, edges_est)

    errs = param_error(fits, true_game)
    eps_per_player = containment_eps(fits, true_game)
    eps_cont = max(eps_per_player.values()) if eps_per_player else 0.0
    unconverged = tuple(sorted(i for i, fr in fits.items() if not fr.converged))
    converged_players = [i for i in fits if i not in unconverged]

    est_game = game_from_fits(fits, budget=true_game.budget)
    rate = verify_containment(
        true_game, est_game, eps_cont, n_points, seed, players=converged_players,
    )

    delta = epsilon = None
    if exact_batch is not None and sigma is not None and true_game.blocks:
        from .diagnostics import population_h
        w_max = max(float(np.abs(w).max()) for w in true_game.blocks.values())
        deltas, epsilons = [], []
        for i, fr in fits.items():
            nb = in_neighbors(true_game, i)
            if not nb:
                continue
            h = population_h(exact_batch, i, sigma)
            inc = sample_incoherence(h, nb, i, true_game.n, true_game.k)
            if not (0 < inc.alpha < 1):
                continue
            c_min = support_min_eigenvalue(h, nb, i, true_game.n, true_game.k)
            if not (c_min > 0):
                continue
            d_i, _ = delta_bound(true_game.k, len(nb), c_min, inc.alpha,
                                 fr.lam, sigma, w_max)
            deltas.append(d_i)
            epsilons.append(epsilon_bound(len(nb), d_i, true_game.budget))
        if deltas:
            delta = max(deltas)
            epsilon = max(epsilons)

    return RecoveryReport(
        edges_true=tuple(sorted(edges_true)),
        edges_est=tuple(sorted(edges_est)),
        precision=precision, recall=recall, f1=f1,
        exact_structure=edges_true == edges_est,
        param_error_per_player=errs,
        param_error_binf=max(errs.values()) if errs else 0.0,
        eps_containment=eps_cont,
        containment_rate=rate,
        delta=delta, epsilon=epsilon,
        unconverged_players=unconverged,
    )


def save_report(report: RecoveryReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
