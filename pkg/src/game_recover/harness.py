"""Config-driven experiment engine: generate -> sample -> fit -> evaluate.

A sweep enumerates the cartesian product of the configured grids (n, k, d,
T, sigma, lambda) times `repetitions`.  Every task derives its own seeds
from (master_seed, grid index, repetition) through SeedSequence, so any
subset of the sweep reproduces independently and results do not depend on
scheduling.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import diagnostics_report
from .equilibrium_sampler import NOISE_FAMILIES, NoiseSpec, equilibrium_basis, \
    perturb, sample_equilibria
from .errors import GameRecoverError, InvalidInputError
from .game_generator import GeneratorConfig, check_assumptions, generate
from .group_lasso import SolverConfig, fit_all, lambda_theoretical
from .recovery import evaluate

log = logging.getLogger(__name__)

MAX_REGENERATIONS = 100

RESULT_COLUMNS = [
    "grid_index", "repetition", "n", "k", "d", "T", "sigma",
    "lambda_policy", "lambda_value", "seed",
    "f1", "precision", "recall", "exact_structure", "param_error",
    "alpha_empirical", "c_min_empirical", "kkt_residual_max",
    "converged_all", "error",
]


def lambda_scaled(c: float, n: int, k: int, t: int) -> float:
    """Penalty schedule c * sqrt(log(max(n,2)*k) / T)."""
    return c * math.sqrt(math.log(max(n, 2) * k) / t)


def parse_lambda_policy(token) -> tuple[str, float | None]:
    """Normalize a lambda grid entry to (policy, value).

    Accepts a number, "theoretical", or "scaled:<c>".
    """
    if isinstance(token, (int, float)) and not isinstance(token, bool):
        return "fixed", float(token)
    if isinstance(token, str):
        if token == "theoretical":
            return "theoretical", None
        if token.startswith("scaled:"):
            try:
                return "scaled", float(token.split(":", 1)[1])
            except ValueError as exc:
                raise InvalidInputError(f"bad scaled lambda {token!r}") from exc
        try:
            return "fixed", float(token)
        except ValueError:
            pass
    raise InvalidInputError(
        f"lambda entry {token!r} is not a number, 'theoretical', or 'scaled:c'")


def _as_grid(value, name) -> tuple:
    vals = value if isinstance(value, list) else [value]
    if not vals:
        raise InvalidInputError(f"grid {name!r} must be non-empty")
    return tuple(vals)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated sweep configuration; see README for the JSON schema."""

    n: tuple[int, ...]
    k: tuple[int, ...]
    d: tuple[int, ...]
    t: tuple[int, ...]
    sigma: tuple[float, ...]
    lam: tuple[tuple[str, float | None], ...]
    repetitions: int
    master_seed: int
    noise: str
    weight_low: float
    weight_high: float
    budget: float
    target_equilibrium_scale: float
    reject_alpha_below: float | None
    solver: SolverConfig
    n_points: int
    output: str | None = None

    def grid_points(self):
        return list(itertools.product(self.n, self.k, self.d, self.t,
                                      self.sigma, self.lam))

    def require_scalar(self, command: str):
        for name, grid in (("n", self.n), ("k", self.k), ("d", self.d),
                           ("T", self.t), ("sigma", self.sigma),
                           ("lambda", self.lam)):
            if len(grid) != 1:
                raise InvalidInputError(
                    f"{command} needs a scalar {name!r}, got a grid of "
                    f"{len(grid)} values")


def parse_experiment_config(doc: dict) -> ExperimentConfig:
    try:
        gen = doc.get("generator", {})
        solver_doc = doc.get("solver", {})
        lam_grid = tuple(parse_lambda_policy(v)
                         for v in _as_grid(doc.get("lambda", 0.0), "lambda"))
        noise = doc.get("noise", "gaussian")
        if noise not in NOISE_FAMILIES:
            raise InvalidInputError(
                f"noise must be one of {NOISE_FAMILIES}, got {noise!r}")
        cfg = ExperimentConfig(
            n=tuple(int(v) for v in _as_grid(doc["n"], "n")),
            k=tuple(int(v) for v in _as_grid(doc["k"], "k")),
            d=tuple(int(v) for v in _as_grid(doc["d"], "d")),
            t=tuple(int(v) for v in _as_grid(doc["T"], "T")),
            sigma=tuple(float(v) for v in _as_grid(doc["sigma"], "sigma")),
            lam=lam_grid,
            repetitions=int(doc.get("repetitions", 1)),
            master_seed=int(doc.get("master_seed", 0)),
            noise=noise,
            weight_low=float(gen.get("weight_low", 0.3)),
            weight_high=float(gen.get("weight_high", 0.7)),
            budget=float(gen.get("budget", 1.0)),
            target_equilibrium_scale=float(
                gen.get("target_equilibrium_scale", 0.8)),
            reject_alpha_below=(
                None if gen.get("reject_alpha_below") is None
                else float(gen["reject_alpha_below"])),
            solver=SolverConfig(
                lam=0.0,
                step_rule=solver_doc.get("step_rule", "fixed"),
                tol_kkt=float(solver_doc.get("tol_kkt", 1e-8)),
                tol_rel_obj=float(solver_doc.get("tol_rel_obj", 1e-10)),
                max_iter=int(solver_doc.get("max_iter", 50_000)),
                acceleration=bool(solver_doc.get("acceleration", True)),
            ),
            n_points=int(doc.get("evaluate", {}).get("n_points", 200)),
            output=doc.get("output"),
        )
    except KeyError as exc:
        raise InvalidInputError(f"config is missing required key {exc}") from exc
    if cfg.repetitions < 1:
        raise InvalidInputError("repetitions must be >= 1")
    return cfg


def load_experiment_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_experiment_config(json.load(fh))


def task_seeds(master_seed: int, grid_index: int, repetition: int) -> tuple[int, ...]:
    """Four derived seeds (generate, sample, noise, containment) per task."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(grid_index, repetition))
    return tuple(int(s) for s in ss.generate_state(4, dtype=np.uint64))


@dataclass
class TaskArtifacts:
    """Everything a single pipeline run produced (kept for reuse in tests)."""

    game: object
    exact: object
    noisy: object
    fits: dict
    report: object
    diagnostics: object
    lambda_value: float
    seeds: tuple[int, ...]
    row: dict = field(default_factory=dict)


def _resolve_lambda(policy, value, n, k, d, t, sigma, game, exact_batch, budget):
    if policy == "fixed":
        return value
    if policy == "scaled":
        return lambda_scaled(value, n, k, t)
    assumptions = check_assumptions(game, exact_batch, sigma)
    sc = n - 1 - min(d, n - 1)
    if sc < 1:
        raise InvalidInputError(
            "theoretical lambda needs at least one non-neighbor per player")
    if not (0 < assumptions.alpha <= 1):
        raise GameRecoverError(
            f"incoherence margin alpha={assumptions.alpha:.4f} is outside (0, 1]; "
            "theoretical lambda is undefined")
    val, _ = lambda_theoretical(
        k=k, s=min(d, n - 1), sc=sc, t=t, sigma=sigma, b=budget,
        alpha=assumptions.alpha, w_max=assumptions.w_max,
        w_min=assumptions.w_min)
    return val


def run_task(config: ExperimentConfig, grid_index: int, repetition: int,
             keep_artifacts: bool = False) -> TaskArtifacts:
    """Run one grid point once; all randomness comes from derived seeds."""
    n, k, d, t, sigma, (policy, value) = config.grid_points()[grid_index]
    seeds = task_seeds(config.master_seed, grid_index, repetition)
    gen_seed, sample_seed, noise_seed, contain_seed = seeds

    attempt = 0
    while True:
        gcfg = GeneratorConfig(
            n=n, k=k, d=d, weight_low=config.weight_low,
            weight_high=config.weight_high,
            seed=(gen_seed + attempt) % 2 ** 64,
            target_equilibrium_scale=config.target_equilibrium_scale,
            budget=config.budget)
        game = generate(gcfg)
        basis = equilibrium_basis(game)
        exact = sample_equilibria(game, basis, t, sample_seed,
                                  scale=config.target_equilibrium_scale)
        if config.reject_alpha_below is None:
            break
        if check_assumptions(game, exact, sigma).alpha >= config.reject_alpha_below:
            break
        attempt += 1
        if attempt >= MAX_REGENERATIONS:
            raise GameRecoverError(
                f"no game reached alpha >= {config.reject_alpha_below} in "
                f"{MAX_REGENERATIONS} regenerations")

    noisy = perturb(exact, NoiseSpec(config.noise, sigma), noise_seed)
    lam = _resolve_lambda(policy, value, n, k, d, t, sigma, game, exact,
                          config.budget)
    fits = fit_all(noisy, lam, config.solver)
    diag = diagnostics_report(game, noisy, sigma)
    report = evaluate(game, fits, n_points=config.n_points, seed=contain_seed)

    row = {
        "grid_index": grid_index, "repetition": repetition,
        "n": n, "k": k, "d": d, "T": t, "sigma": sigma,
        "lambda_policy": policy if policy != "fixed" else "fixed",
        "lambda_value": lam, "seed": gen_seed,
        "f1": report.f1, "precision": report.precision, "recall": report.recall,
        "exact_structure": int(report.exact_structure),
        "param_error": report.param_error_binf,
        "alpha_empirical": min(p.alpha_empirical for p in diag.players.values()),
        "c_min_empirical": min(p.c_min_empirical for p in diag.players.values()),
        "kkt_residual_max": max(f.kkt_residual for f in fits.values()),
        "converged_all": int(all(f.converged for f in fits.values())),
        "error": "",
    }
    arts = TaskArtifacts(
        game=game, exact=exact, noisy=noisy, fits=fits, report=report,
        diagnostics=diag, lambda_value=lam, seeds=seeds, row=row)
    if not keep_artifacts:
        arts.game = arts.exact = arts.noisy = arts.fits = None
        arts.report = arts.diagnostics = None
    return arts


def _error_row(config, grid_index, repetition, exc) -> dict:
    n, k, d, t, sigma, (policy, value) = config.grid_points()[grid_index]
    seeds = task_seeds(config.master_seed, grid_index, repetition)
    row = {c: "" for c in RESULT_COLUMNS}
    row.update({
        "grid_index": grid_index, "repetition": repetition,
        "n": n, "k": k, "d": d, "T": t, "sigma": sigma,
        "lambda_policy": policy, "lambda_value": "", "seed": seeds[0],
        "error": str(exc).replace("\n", " "),
    })
    return row


def run_sweep(config: ExperimentConfig, jobs: int = 1,
              timing: bool = False) -> list[dict]:
    """All (grid point, repetition) rows, sorted by (grid_index, repetition).

    Per-task failures become rows with the `error` column set.  With
    `timing` a non-canonical wall_time_ms column is appended; leave it off
    when byte-stable output matters.
    """
    tasks = [(g, r) for g in range(len(config.grid_points()))
             for r in range(config.repetitions)]

    def run_one(task):
        g, r = task
        start = time.perf_counter()
        try:
            row = run_task(config, g, r).row
        except GameRecoverError as exc:
            log.warning("task (grid=%d, rep=%d) failed: %s", g, r, exc)
            row = _error_row(config, g, r, exc)
        if timing:
            row["wall_time_ms"] = (time.perf_counter() - start) * 1e3
        return row

    if jobs == 1:
        rows = [run_one(t) for t in tasks]
    else:
        workers = jobs if jobs > 0 else None
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_one, tasks))
    rows.sort(key=lambda r: (r["grid_index"], r["repetition"]))
    return rows


def write_results_csv(rows: list[dict], path, timing: bool = False) -> None:
    columns = RESULT_COLUMNS + (["wall_time_ms"] if timing else [])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_csv_cell(row.get(c, "")) for c in columns])


def _csv_cell(value):
    if isinstance(value, float):
        return repr(value)
    return value
