"""Random sparse games with a planted nontrivial equilibrium subspace.

Construction: draw exactly min(d, n-1) in-neighbors per player, fill their
blocks with i.i.d. nonnegative entries, then rescale every block by the
spectral radius of the assembled matrix.  After rescaling, 1 is the leading
eigenvalue, so the fixed-point system x = Wbar x has a nontrivial solution
ray (a real one, because the matrix is entrywise nonnegative) while the
sparsity pattern is untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import dominant_eigenvalue
from .diagnostics import population_h, sample_incoherence, support_min_eigenvalue
from .equilibrium_sampler import EXACT_RESIDUAL_TOL, SampleBatch, _per_player_norms
from .errors import GenerationError, InvalidInputError
from .game_model import GraphicalGame, assemble, in_neighbors

__all__ = [
    "GeneratorConfig", "AssumptionReport", "generate", "assemble",
    "check_assumptions", "spectral_radius",
]


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs for `generate`.

    d is the in-degree given to every player (capped at n-1); block entries
    are drawn uniformly from [weight_low, weight_high] before the spectral
    rescale; target_equilibrium_scale is the fraction of the budget used by
    the largest per-player norm when equilibria are later sampled.
    """

    n: int
    k: int
    d: int
    weight_low: float
    weight_high: float
    seed: int
    target_equilibrium_scale: float = 0.8
    budget: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise InvalidInputError(f"need n >= 2 players, got {self.n}")
        if self.k < 1:
            raise InvalidInputError(f"need k >= 1, got {self.k}")
        if not (1 <= self.d <= self.n - 1):
            raise InvalidInputError(f"need 1 <= d <= n-1, got d={self.d}")
        if not (0 < self.weight_low <= self.weight_high):
            raise InvalidInputError(
                f"need 0 < weight_low <= weight_high, got "
                f"[{self.weight_low}, {self.weight_high}]")
        if not (0 < self.target_equilibrium_scale <= 1):
            raise InvalidInputError("target_equilibrium_scale must be in (0, 1]")
        if not (self.budget > 0):
            raise InvalidInputError(f"budget must be positive, got {self.budget}")


def spectral_radius(m: np.ndarray, tol: float = 1e-12,
                    max_iter: int = 10_000) -> float:
    """Spectral radius of an entrywise-nonnegative matrix (power iteration)."""
    m = np.asarray(m, dtype=float)
    if np.any(m < 0):
        raise InvalidInputError("spectral_radius expects a nonnegative matrix")
    return dominant_eigenvalue(m, tol=tol, max_iter=max_iter)


def generate(config: GeneratorConfig) -> GraphicalGame:
    """Build a random game whose assembled matrix has leading eigenvalue 1."""
    rng = np.random.default_rng(config.seed)
    n, k = config.n, config.k
    degree = min(config.d, n - 1)
    blocks = {}
    for i in range(n):
        candidates = np.array([j for j in range(n) if j != i])
        chosen = rng.choice(candidates, size=degree, replace=False)
        for j in chosen:
            blocks[(i, int(j))] = rng.uniform(
                config.weight_low, config.weight_high, (k, k))
    raw = GraphicalGame(n=n, k=k, budget=config.budget, blocks=blocks)
    rho = spectral_radius(assemble(raw))
    if rho <= 0:
        raise GenerationError("assembled matrix has zero spectral radius")
    scaled = {edge: w / rho for edge, w in blocks.items()}
    return GraphicalGame(n=n, k=k, budget=config.budget, blocks=scaled)


@dataclass(frozen=True)
class AssumptionReport:
    """Numerical check of the standing assumptions on a game plus batch.

    alpha and c_min are minima over players (per-player values attached);
    negative eigenvalues are clipped to 0 with `clipped` set; a singular
    support restriction sets c_min to 0 for that player and flags it.
    """

    alpha: float
    c_min: float
    w_max: float
    w_min: float
    budget_ok: bool
    zero_utility_ok: bool
    alpha_per_player: tuple[float, ...]
    c_min_per_player: tuple[float, ...]
    clipped: bool
    singular_players: tuple[int, ...]


def check_assumptions(game: GraphicalGame, exact_equilibria: SampleBatch,
                      sigma: float) -> AssumptionReport:
    """Evaluate budget, zero-utility, and incoherence conditions numerically.

    The second-moment matrices use the exact equilibria plus sigma^2 on the
    diagonal.  Players with an empty support or an empty complement get
    alpha = 1 by convention; empty supports contribute no c_min.
    """
    if exact_equilibria.kind != "exact":
        raise InvalidInputError("check_assumptions expects an exact batch")

    alphas, c_mins, singular = [], [], []
    clipped = False
    for i in range(game.n):
        h = population_h(exact_equilibria, i, sigma)
        nb = in_neighbors(game, i)
        inc = sample_incoherence(h, nb, i, game.n, game.k)
        alphas.append(inc.alpha)
        if inc.singular:
            singular.append(i)
            c_mins.append(0.0)
            continue
        c_min = support_min_eigenvalue(h, nb, i, game.n, game.k)
        if c_min < 0:
            clipped = True
            c_min = 0.0
        c_mins.append(c_min)

    entries = np.concatenate([np.abs(w).ravel() for w in game.blocks.values()]) \
        if game.blocks else np.array([0.0])
    nonzero = entries[entries > 0]
    norms = _per_player_norms(exact_equilibria.data, game.n, game.k)
    budget_ok = bool(norms.max() <= game.budget * (1 + 1e-12))
    resid = exact_equilibria.data - exact_equilibria.data @ assemble(game).T
    zero_utility_ok = bool(
        _per_player_norms(resid, game.n, game.k).max() <= EXACT_RESIDUAL_TOL)

    return AssumptionReport(
        alpha=float(min(alphas)),
        c_min=float(min(c_mins)),
        w_max=float(entries.max()),
        w_min=float(nonzero.min()) if nonzero.size else 0.0,
        budget_ok=budget_ok,
        zero_utility_ok=zero_utility_ok,
        alpha_per_player=tuple(alphas),
        c_min_per_player=tuple(c_mins),
        clipped=clipped,
        singular_players=tuple(singular),
    )
