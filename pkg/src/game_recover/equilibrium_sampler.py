"""Equilibrium subspace computation, exact sampling, and noisy observation.

The equilibria of a game are the vectors fixed by the assembled weight
matrix, i.e. the nullspace of (I - Wbar) intersected with the budget
balls.  We compute an orthonormal basis of that nullspace, draw random
points from it at a controlled fraction of the budget, and perturb them
coordinatewise with zero-mean sub-Gaussian noise.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, NoEquilibriumError, NumericalError
from .game_model import GraphicalGame, assemble

NOISE_FAMILIES = ("gaussian", "uniform", "rademacher")

# exact samples must satisfy the fixed point up to this per-player residual
EXACT_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class NoiseSpec:
    """Noise family plus scale; sigma^2 is a valid sub-Gaussian variance proxy.

    gaussian: N(0, sigma^2) per coordinate.
    uniform:  U[-a, a] with a = sigma*sqrt(3), so the variance is sigma^2.
    rademacher: +/- sigma with equal probability.
    """

    family: str
    sigma: float

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise InvalidInputError(
                f"unknown noise family {self.family!r}; choose from {NOISE_FAMILIES}"
            )
        if not (self.sigma > 0):
            raise InvalidInputError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class SampleBatch:
    """T joint actions, one per row, with provenance.

    kind is "exact" (rows are equilibria of the source game) or
    "perturbed" (exact rows plus independent noise described by `noise`).
    """

    data: np.ndarray
    n: int
    k: int
    kind: str
    seed: int
    noise: NoiseSpec | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] < 1:
            raise InvalidInputError("batch data must be a T x (n*k) matrix, T >= 1")
        if data.shape[1] != self.n * self.k:
            raise InvalidInputError(
                f"rows have length {data.shape[1]}, expected n*k = {self.n * self.k}"
            )
        if self.kind not in ("exact", "perturbed"):
            raise InvalidInputError(f"kind must be exact|perturbed, got {self.kind!r}")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def t(self) -> int:
        return self.data.shape[0]

    def player(self, i: int) -> np.ndarray:
        """T x k columns belonging to player i."""
        return self.data[:, i * self.k:(i + 1) * self.k]

    def others(self, i: int) -> np.ndarray:
        """T x (n-1)k matrix with player i's columns removed."""
        cols = np.r_[0:i * self.k, (i + 1) * self.k:self.n * self.k]
        return self.data[:, cols]


def equilibrium_basis(game: GraphicalGame, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (nk x m) of the numerical nullspace of I - Wbar.

    Singular values below tol * (largest singular value) count as zero;
    m may be 0 when the game has no nontrivial equilibrium direction.
    """
    if not (tol > 0):
        raise InvalidInputError(f"tol must be positive, got {tol}")
    a = np.eye(game.dim) - assemble(game)
    _, s, vt = np.linalg.svd(a)
    rank = int(np.sum(s > tol * s[0]))
    return vt[rank:].T.copy()


def _per_player_norms(x: np.ndarray, n: int, k: int) -> np.ndarray:
    """Row-wise l2 norm of each player's k-block; shape (T, n)."""
    return np.linalg.norm(x.reshape(-1, n, k), axis=2)


def sample_equilibria(game: GraphicalGame, basis: np.ndarray, t: int,
                      seed: int, scale: float = 0.8) -> SampleBatch:
    """Draw T exact equilibria from the span of `basis`.

    Each sample is a standard-normal combination of basis columns rescaled
    so the largest per-player action norm equals scale * budget.  Every
    returned row is verified to satisfy the fixed point within
    EXACT_RESIDUAL_TOL and to respect the budget.
    """
    if basis.shape[1] == 0:
        raise NoEquilibriumError(
            "equilibrium subspace is trivial; only x* = 0 is an equilibrium"
        )
    if t < 1:
        raise InvalidInputError(f"need T >= 1 samples, got {t}")
    if not (0 < scale <= 1):
        raise InvalidInputError(f"scale must be in (0, 1], got {scale}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((t, basis.shape[1])) @ basis.T
    norms = _per_player_norms(x, game.n, game.k).max(axis=1)
    for _ in range(100):
        dead = norms == 0.0
        if not dead.any():
            break
        x[dead] = rng.standard_normal((int(dead.sum()), basis.shape[1])) @ basis.T
        norms = _per_player_norms(x, game.n, game.k).max(axis=1)
    else:
        raise NumericalError("could not draw a nonzero equilibrium sample")
    x *= (scale * game.budget / norms)[:, None]

    resid = x - x @ assemble(game).T
    worst = _per_player_norms(resid, game.n, game.k).max()
    if worst > EXACT_RESIDUAL_TOL:
        raise NumericalError(
            f"sampled equilibrium violates the fixed point: residual {worst:.3e}"
        )
    return SampleBatch(data=x, n=game.n, k=game.k, kind="exact", seed=seed)


def noise_stream(noise: NoiseSpec, shape: tuple[int, ...], seed: int) -> np.ndarray:
    """The exact noise array perturb() adds for this (noise, shape, seed)."""
    rng = np.random.default_rng(seed)
    if noise.family == "gaussian":
        return noise.sigma * rng.standard_normal(shape)
    if noise.family == "uniform":
        half_width = noise.sigma * np.sqrt(3.0)
        return rng.uniform(-half_width, half_width, shape)
    return noise.sigma * (2.0 * rng.integers(0, 2, shape) - 1.0)


def perturb(batch: SampleBatch, noise: NoiseSpec, seed: int) -> SampleBatch:
    """Return a new batch with i.i.d. per-coordinate noise added."""
    if batch.kind != "exact":
        raise InvalidInputError("perturb expects an exact batch")
    e = noise_stream(noise, batch.data.shape, seed)
    return SampleBatch(
        data=batch.data + e, n=batch.n, k=batch.k,
        kind="perturbed", seed=seed, noise=noise,
    )


def _sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".meta.json")


def save_batch(batch: SampleBatch, csv_path) -> None:
    """Write `sample,player,coord,value` CSV plus a .meta.json sidecar."""
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample", "player", "coord", "value"])
        for t in range(batch.t):
            row = batch.data[t]
            for i in range(batch.n):
                for c in range(batch.k):
                    writer.writerow([t, i, c, repr(float(row[i * batch.k + c]))])
    meta = {
        "kind": batch.kind,
        "noise": None if batch.noise is None else
        {"family": batch.noise.family, "sigma": batch.noise.sigma},
        "seed": int(batch.seed),
        "n": batch.n,
        "k": batch.k,
        "T": batch.t,
    }
    with open(_sidecar_path(csv_path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_batch(csv_path) -> SampleBatch:
    with open(_sidecar_path(csv_path)) as fh:
        meta = json.load(fh)
    n, k, t = int(meta["n"]), int(meta["k"]), int(meta["T"])
    data = np.zeros((t, n * k))
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["sample", "player", "coord", "value"]:
            raise InvalidInputError(f"unexpected batch CSV header: {header}")
        for row in reader:
            data[int(row[0]), int(row[1]) * k + int(row[2])] = float(row[3])
    noise = meta["noise"]
    return SampleBatch(
        data=data, n=n, k=k, kind=meta["kind"], seed=int(meta["seed"]),
        noise=None if noise is None else NoiseSpec(noise["family"], noise["sigma"]),
    )
