"""Blockwise-sparse least squares per player, with a KKT certificate.

For player i we regress its observed actions on the stacked actions of all
other players:

    minimize_W  (1/T) sum_t || x_i^t - W^T x_others^t ||_2^2
                + lambda * sum_blocks ||W_b||_F

where W is (n-1)k x k and block b holds the k rows belonging to one
candidate in-neighbor.  The penalty zeroes whole blocks, so the nonzero
block set is the estimated in-neighbor set.  Solved by proximal gradient
(optionally FISTA-accelerated with gradient-based restart); optimality is
certified by the blockwise stationarity residual, which is exactly zero at
a true optimum.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ._linalg import dominant_eigenvalue
from .block_norms import RowBlockMatrix, uniform_partition
from .equilibrium_sampler import SampleBatch
from .errors import InvalidInputError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """Penalty weight and termination knobs for `fit`."""

    lam: float = 0.0
    step_rule: str = "fixed"          # fixed (1/L) | backtracking
    tol_kkt: float = 1e-8
    tol_rel_obj: float = 1e-10
    max_iter: int = 50_000
    acceleration: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise InvalidInputError(f"lambda must be >= 0, got {self.lam}")
        if self.step_rule not in ("fixed", "backtracking"):
            raise InvalidInputError(f"unknown step_rule {self.step_rule!r}")
        if not (self.tol_kkt > 0 and self.tol_rel_obj > 0):
            raise InvalidInputError("tolerances must be positive")
        if self.max_iter < 1:
            raise InvalidInputError("max_iter must be >= 1")


@dataclass(frozen=True)
class FitResult:
    """Estimated stacked coefficient matrix for one player plus certificates.

    `w_hat` rows are partitioned into one k x k block per candidate
    in-neighbor, in increasing player order with the fitted player skipped.
    Each stored block is the transpose of the game-orientation weight
    matrix; `game_block(j)` undoes that.
    """

    player: int
    n: int
    k: int
    lam: float
    w_hat: RowBlockMatrix
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool
    error: str | None = None

    @property
    def candidate_players(self) -> tuple[int, ...]:
        return tuple(j for j in range(self.n) if j != self.player)

    @property
    def active_blocks(self) -> frozenset[int]:
        """Players j whose fitted block is nonzero."""
        return frozenset(
            j for b, j in enumerate(self.candidate_players)
            if np.any(self.w_hat.block(b))
        )

    def game_block(self, j: int) -> np.ndarray:
        """Fitted k x k weight matrix on edge (player, j), game orientation."""
        b = self.candidate_players.index(j)
        return self.w_hat.block(b).T.copy()

    def to_json_dict(self) -> dict:
        return {
            "player": self.player,
            "lambda": self.lam,
            "objective": self.objective,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "blocks": [
                {"j": j, "matrix": self.game_block(j).tolist()}
                for j in sorted(self.active_blocks)
            ],
        }


def block_soft_threshold(v: np.ndarray, tau: float) -> np.ndarray:
    """Shrink the Frobenius norm of `v` by `tau`, to exactly zero if smaller."""
    if tau < 0:
        raise InvalidInputError(f"tau must be >= 0, got {tau}")
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm <= tau:
        return np.zeros_like(v)
    return (1.0 - tau / norm) * v


def _prox_stacked(w: np.ndarray, tau: float, k: int) -> np.ndarray:
    """Blockwise soft threshold of the stacked (B*k) x k matrix."""
    if tau == 0.0:
        return w.copy()
    blocks = w.reshape(-1, k, w.shape[1])
    norms = np.sqrt((blocks * blocks).sum(axis=(1, 2)))
    keep = norms > tau
    factor = np.zeros_like(norms)
    np.divide(tau, norms, out=factor, where=keep)
    factor = np.where(keep, 1.0 - factor, 0.0)
    return (blocks * factor[:, None, None]).reshape(w.shape)


def _block_norms(w: np.ndarray, k: int) -> np.ndarray:
    blocks = w.reshape(-1, k, w.shape[1])
    return np.sqrt((blocks * blocks).sum(axis=(1, 2)))


def _kkt_from_grad(grad: np.ndarray, w: np.ndarray, lam: float, k: int) -> float:
    """Max over blocks of the distance of -grad to the penalty subdifferential."""
    gb = grad.reshape(-1, k, grad.shape[1])
    wb = w.reshape(-1, k, w.shape[1])
    norms = np.sqrt((wb * wb).sum(axis=(1, 2)))
    worst = 0.0
    for b in range(gb.shape[0]):
        if norms[b] > 0:
            r = float(np.linalg.norm(gb[b] + lam * wb[b] / norms[b]))
        else:
            r = max(0.0, float(np.linalg.norm(gb[b])) - lam)
        worst = max(worst, r)
    return worst


def _player_data(batch: SampleBatch, i: int):
    """Second-moment statistics sufficient for the player-i objective."""
    if not (0 <= i < batch.n):
        raise InvalidInputError(f"player index {i} out of range for n={batch.n}")
    if not np.all(np.isfinite(batch.data)):
        raise InvalidInputError("batch contains non-finite values")
    xm = batch.others(i)
    y = batch.player(i)
    h = xm.T @ xm / batch.t
    c = xm.T @ y / batch.t
    y_ss = float((y * y).sum()) / batch.t
    return h, c, y_ss


def lambda_max(batch: SampleBatch, i: int) -> float:
    """Smallest penalty at which the all-zero solution is optimal."""
    _, c, _ = _player_data(batch, i)
    return float(_block_norms(2.0 * c, batch.k).max())


def kkt_residual(batch: SampleBatch, i: int, w: RowBlockMatrix, lam: float) -> float:
    """Stationarity residual of `w` for player i's objective; 0 at an optimum."""
    if w.partition != uniform_partition((batch.n - 1) * batch.k, batch.k):
        raise InvalidInputError("w must have one k-row block per other player")
    h, c, _ = _player_data(batch, i)
    grad = 2.0 * (h @ w.data - c)
    return _kkt_from_grad(grad, w.data, lam, batch.k)


def fit(batch: SampleBatch, i: int, config: SolverConfig,
        w0: np.ndarray | None = None) -> FitResult:
    """Solve player i's penalized regression by (accelerated) proximal gradient.

    Stops when the KKT residual reaches `tol_kkt`, when the relative
    objective change stalls below `tol_rel_obj`, or at `max_iter`.
    `converged` records only whether the KKT tolerance was met.  `w0`
    enables warm starts across a lambda grid; cold start is zero.
    """
    h, c, y_ss = _player_data(batch, i)
    k, lam = batch.k, config.lam
    m = (batch.n - 1) * k

    lip = 2.0 * dominant_eigenvalue(h)
    step = 1.0 / lip if lip > 0 else 1.0

    if w0 is None:
        w = np.zeros((m, k))
    else:
        w = np.asarray(w0, dtype=float).copy()
        if w.shape != (m, k):
            raise InvalidInputError(f"w0 has shape {w.shape}, expected {(m, k)}")

    def objective_from_grad(wcur, grad):
        loss = y_ss - float(np.vdot(c, wcur)) + 0.5 * float(np.vdot(wcur, grad))
        return loss + lam * float(_block_norms(wcur, k).sum())

    grad_w = 2.0 * (h @ w - c)
    f_prev = objective_from_grad(w, grad_w)
    kkt = _kkt_from_grad(grad_w, w, lam, k)
    v = w.copy()
    momentum = 1.0
    converged = kkt <= config.tol_kkt
    iterations = 0

    while not converged and iterations < config.max_iter:
        iterations += 1
        grad_v = 2.0 * (h @ v - c)
        if config.step_rule == "fixed":
            w_next = _prox_stacked(v - step * grad_v, step * lam, k)
        else:
            loss_v = y_ss - float(np.vdot(c, v)) + 0.5 * float(np.vdot(v, grad_v))
            while True:
                w_next = _prox_stacked(v - step * grad_v, step * lam, k)
                d = w_next - v
                loss_next = (y_ss - 2.0 * float(np.vdot(c, w_next))
                             + float(np.vdot(w_next, h @ w_next)))
                bound = (loss_v + float(np.vdot(grad_v, d))
                         + float(np.vdot(d, d)) / (2.0 * step))
                if loss_next <= bound + 1e-15 * max(1.0, abs(bound)):
                    break
                step *= 0.5

        if config.acceleration:
            if float(np.vdot(v - w_next, w_next - w)) > 0:
                momentum = 1.0
                v = w_next.copy()
            else:
                momentum_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * momentum ** 2))
                v = w_next + ((momentum - 1.0) / momentum_next) * (w_next - w)
                momentum = momentum_next
        else:
            v = w_next
        w = w_next

        grad_w = 2.0 * (h @ w - c)
        kkt = _kkt_from_grad(grad_w, w, lam, k)
        if kkt <= config.tol_kkt:
            converged = True
            break
        f_cur = objective_from_grad(w, grad_w)
        if abs(f_prev - f_cur) <= config.tol_rel_obj * max(abs(f_cur), 1e-12):
            break
        f_prev = f_cur

    grad_w = 2.0 * (h @ w - c)
    kkt = _kkt_from_grad(grad_w, w, lam, k)
    converged = kkt <= config.tol_kkt
    objective = objective_from_grad(w, grad_w)
    log.debug("fit player=%d lam=%.3g iters=%d kkt=%.3e obj=%.6g",
              i, lam, iterations, kkt, objective)
    return FitResult(
        player=i, n=batch.n, k=k, lam=lam,
        w_hat=RowBlockMatrix(w, uniform_partition(m, k)),
        objective=objective, kkt_residual=kkt,
        iterations=iterations, converged=converged,
    )


def lambda_theoretical(k: int, s: int, sc: int, t: int, sigma: float, b: float,
                       alpha: float, w_max: float, w_min: float):
    """Worst-case penalty threshold from the recovery analysis, term by term.

    Returns (value, terms): `value` is the max of the eleven printed terms
    and `terms` lists them in printed order so callers can inspect, drop,
    or repair individual ones.  alpha = 1 is allowed (the (1-alpha) terms
    vanish); alpha outside (0, 1] is rejected.
    """
    if not (0 < alpha <= 1):
        raise InvalidInputError(f"alpha must be in (0, 1], got {alpha}")
    for name, val in (("k", k), ("s", s), ("sc", sc), ("t", t), ("sigma", sigma),
                      ("b", b), ("w_max", w_max), ("w_min", w_min)):
        if not (val > 0):
            raise InvalidInputError(f"{name} must be positive, got {val}")

    r = (1.0 - alpha) / alpha
    c24r2 = 24.0 * math.sqrt(2.0)
    terms = (
        c24r2 * r * sigma * b * w_max * math.sqrt(k * s * math.log(2 * k * k * s) / t),
        192.0 * r * sigma ** 2 * w_max * math.sqrt(k * math.log(k * k * s) / t),
        192.0 * r * sigma ** 2 * math.sqrt(k) * w_max
        * math.sqrt(w_max * s * math.log(s * k) / (t * w_min)),
        192.0 * r * k ** 0.25 * sigma * math.sqrt(math.log(2 * k * k * s) / t),
        (c24r2 / alpha) * k * sigma * b * w_max
        * math.sqrt(abs(sc * math.log(2 * k * k * sc)) / t),
        (192.0 / alpha) * sigma ** 2 * k * w_max * math.sqrt(math.log(k * k * sc) / t),
        (192.0 / alpha) * sigma ** 2 * k * w_max
        * math.sqrt(w_max * math.sqrt(sc) * math.log(sc * k) / t),
        (c24r2 / alpha) * k * sigma * b * math.sqrt(math.log(2 * k * k * sc) / t),
        (192.0 / alpha) * sigma * math.sqrt(k * math.log(2 * k * k * sc) / t),
        24.0 * (1.0 - alpha) * sigma ** 2 * math.sqrt(k) * w_max / alpha,
        24.0 * sigma ** 2 * k * w_max / alpha,
    )
    return max(terms), terms


def save_fits(fits: dict[int, FitResult], path) -> None:
    """Write all per-player fits as one JSON document."""
    import json

    some = next(iter(fits.values()))
    doc = {
        "n": some.n,
        "k": some.k,
        "fits": [fits[i].to_json_dict() for i in sorted(fits)],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_fits(path) -> dict[int, FitResult]:
    import json

    with open(path) as fh:
        doc = json.load(fh)
    n, k = int(doc["n"]), int(doc["k"])
    out = {}
    for entry in doc["fits"]:
        i = int(entry["player"])
        w = np.zeros(((n - 1) * k, k))
        candidates = [j for j in range(n) if j != i]
        for blk in entry["blocks"]:
            b = candidates.index(int(blk["j"]))
            w[b * k:(b + 1) * k] = np.asarray(blk["matrix"], dtype=float).T
        out[i] = FitResult(
            player=i, n=n, k=k, lam=float(entry["lambda"]),
            w_hat=RowBlockMatrix(w, uniform_partition((n - 1) * k, k)),
            objective=float(entry["objective"]),
            kkt_residual=float(entry["kkt_residual"]),
            iterations=int(entry["iterations"]),
            converged=bool(entry["converged"]),
        )
    return out


def fit_all(batch: SampleBatch, lam, config: SolverConfig,
            jobs: int = 1) -> dict[int, FitResult]:
    """Fit every player; per-player failures land in the result, not raised.

    `lam` is a scalar or a mapping player -> penalty.  Players are
    dispatched to `jobs` worker threads when jobs != 1 (0 means auto);
    outputs are keyed by player and independent of scheduling.
    """
    def lam_for(i):
        if isinstance(lam, dict):
            return float(lam[i])
        try:
            return float(lam)
        except TypeError:
            return float(lam[i])

    def run(i):
        cfg = replace(config, lam=lam_for(i))
        try:
            return fit(batch, i, cfg)
        except Exception as exc:  # noqa: BLE001 - reported per player
            m = (batch.n - 1) * batch.k
            return FitResult(
                player=i, n=batch.n, k=batch.k, lam=cfg.lam,
                w_hat=RowBlockMatrix(np.zeros((m, batch.k)),
                                     uniform_partition(m, batch.k)),
                objective=float("nan"), kkt_residual=float("inf"),
                iterations=0, converged=False, error=str(exc),
            )

    players = range(batch.n)
    if jobs == 1:
        results = [run(i) for i in players]
    else:
        workers = jobs if jobs > 0 else None
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, players))
    return {r.player: r for r in results}
