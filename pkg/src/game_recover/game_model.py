"""Continuous-action graphical games with linear best-response payoffs.

A game has n players, each choosing a k-dimensional action with l2 norm at
most `budget`.  Player i's payoff is the negated distance between its own
action and the weighted sum of its in-neighbors' actions,

    u_i(x) = -|| x_i - sum_{j in S_i} W_ij x_j ||_2,

so the payoff is always <= 0 and equals 0 exactly at a best response.
Edges with a zero weight block are not stored: the key set of `blocks` IS
the structure of the game.

Players are indexed 0..n-1.  A joint action is a flat vector of length n*k
with player i owning coordinates [i*k, (i+1)*k).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class GraphicalGame:
    """Immutable game: player count, action dimension, budget, weight blocks.

    `blocks` maps a directed edge (i, j), i != j, to the k x k weight
    matrix applied to player j's action inside player i's best response.
    Absent keys mean zero blocks; stored blocks must be nonzero.
    """

    n: int
    k: int
    budget: float
    blocks: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError(f"need at least one player, got n={self.n}")
        if self.k < 1:
            raise InvalidInputError(f"action dimension must be >= 1, got k={self.k}")
        if not (self.budget > 0):
            raise InvalidInputError(f"budget must be positive, got {self.budget}")
        clean = {}
        for (i, j), w in self.blocks.items():
            if i == j:
                raise InvalidInputError(f"self-edge ({i}, {i}) is not allowed")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise InvalidInputError(f"edge ({i}, {j}) out of range for n={self.n}")
            w = np.asarray(w, dtype=float)
            if w.shape != (self.k, self.k):
                raise InvalidInputError(
                    f"block ({i}, {j}) has shape {w.shape}, expected {(self.k, self.k)}"
                )
            if not np.any(w):
                raise InvalidInputError(
                    f"block ({i}, {j}) is zero; zero blocks are stored by absence"
                )
            w = w.copy()
            w.setflags(write=False)
            clean[(int(i), int(j))] = w
        object.__setattr__(self, "blocks", clean)

    @property
    def dim(self) -> int:
        """Length n*k of a joint action vector."""
        return self.n * self.k

    def action_slice(self, i: int) -> slice:
        return slice(i * self.k, (i + 1) * self.k)

    def edges(self) -> set[tuple[int, int]]:
        return set(self.blocks.keys())


def _check_player(game: GraphicalGame, i: int) -> None:
    if not (0 <= i < game.n):
        raise InvalidInputError(f"player index {i} out of range for n={game.n}")


def _check_action(game: GraphicalGame, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != game.dim:
        raise InvalidInputError(
            f"joint action has length {x.shape[0]}, expected {game.dim}"
        )
    return x


def in_neighbors(game: GraphicalGame, i: int) -> set[int]:
    """Players whose blocks enter player i's best response."""
    _check_player(game, i)
    return {j for (a, j) in game.blocks if a == i}


def best_response_residual(game: GraphicalGame, i: int, x) -> float:
    """l2 distance between x_i and the weighted neighbor sum."""
    _check_player(game, i)
    x = _check_action(game, x)
    target = np.zeros(game.k)
    for (a, j), w in game.blocks.items():
        if a == i:
            target += w @ x[game.action_slice(j)]
    return float(np.linalg.norm(x[game.action_slice(i)] - target))


def payoff(game: GraphicalGame, i: int, x) -> float:
    """Player i's payoff at joint action x; always <= 0."""
    return -best_response_residual(game, i, x) + 0.0


def is_epsilon_psne(game: GraphicalGame, x, eps: float) -> bool:
    """Whether x is an eps-approximate equilibrium with all actions in budget.

    Requires, for every player, a best-response residual at most `eps`
    and ||x_i||_2 <= budget (the action sets are budget balls).
    """
    if eps < 0:
        raise InvalidInputError(f"eps must be nonnegative, got {eps}")
    x = _check_action(game, x)
    for i in range(game.n):
        if np.linalg.norm(x[game.action_slice(i)]) > game.budget:
            return False
        if best_response_residual(game, i, x) > eps:
            return False
    return True


def assemble(game: GraphicalGame) -> np.ndarray:
    """Dense nk x nk matrix with block (i, j) = W_ij and zero diagonal blocks.

    Equilibria are exactly the solutions of x = assemble(game) @ x inside
    the budget balls.
    """
    m = np.zeros((game.dim, game.dim))
    for (i, j), w in game.blocks.items():
        m[game.action_slice(i), game.action_slice(j)] = w
    return m


def to_json_dict(game: GraphicalGame) -> dict:
    return {
        "n": game.n,
        "k": game.k,
        "budget": game.budget,
        "blocks": [
            {"i": i, "j": j, "matrix": game.blocks[(i, j)].tolist()}
            for (i, j) in sorted(game.blocks)
        ],
    }


def from_json_dict(doc: dict) -> GraphicalGame:
    try:
        blocks = {
            (int(b["i"]), int(b["j"])): np.asarray(b["matrix"], dtype=float)
            for b in doc["blocks"]
        }
        return GraphicalGame(
            n=int(doc["n"]), k=int(doc["k"]), budget=float(doc["budget"]),
            blocks=blocks,
        )
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed game document: {exc}") from exc


def save_game(game: GraphicalGame, path) -> None:
    """Write the game as JSON; floats use shortest round-trip decimals."""
    with open(path, "w") as fh:
        json.dump(to_json_dict(game), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_game(path) -> GraphicalGame:
    with open(path) as fh:
        return from_json_dict(json.load(fh))
