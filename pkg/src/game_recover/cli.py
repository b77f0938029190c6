"""Command-line front end wiring the pipeline into reproducible runs.

Subcommands: generate, sample, fit, evaluate, check, sweep, report.
All outputs are pure functions of their inputs and seeds; re-running a
command with identical inputs produces byte-identical files.

Exit codes: 0 success, 2 config error, 3 I/O error, 4 numerical failure.
Logging level comes from the GAME_RECOVER_LOG environment variable
(error|warn|info|debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import diagnostics, game_model, group_lasso, recovery
from .equilibrium_sampler import NOISE_FAMILIES, NoiseSpec, equilibrium_basis, \
    load_batch, perturb, sample_equilibria, save_batch
from .errors import GameRecoverError, InvalidInputError
from .game_generator import GeneratorConfig, check_assumptions, generate
from .group_lasso import SolverConfig, fit_all, lambda_theoretical
from .harness import lambda_scaled, load_experiment_config, parse_lambda_policy, \
    run_sweep, write_results_csv

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def _setup_logging():
    level = os.environ.get("GAME_RECOVER_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        raise InvalidInputError(
            f"GAME_RECOVER_LOG must be one of {sorted(levels)}, got {level!r}")
    logging.basicConfig(level=levels[level],
                        format="%(levelname)s %(name)s: %(message)s")


def _cmd_generate(args) -> int:
    cfg = load_experiment_config(args.config)
    cfg.require_scalar("generate")
    n, k, d, _, _, _ = cfg.grid_points()[0]
    seed = args.seed if args.seed is not None else cfg.master_seed
    game = generate(GeneratorConfig(
        n=n, k=k, d=d, weight_low=cfg.weight_low, weight_high=cfg.weight_high,
        seed=seed, target_equilibrium_scale=cfg.target_equilibrium_scale,
        budget=cfg.budget))
    game_model.save_game(game, args.out)
    log.info("wrote game with %d edges to %s", len(game.blocks), args.out)
    return EXIT_OK


def _cmd_sample(args) -> int:
    game = game_model.load_game(args.game)
    basis = equilibrium_basis(game)
    exact = sample_equilibria(game, basis, args.T, args.seed, scale=args.scale)
    noisy = perturb(exact, NoiseSpec(args.noise, args.sigma), args.seed + 1)
    save_batch(exact, f"{args.out}_exact.csv")
    save_batch(noisy, f"{args.out}_perturbed.csv")
    log.info("wrote %d exact and perturbed samples under prefix %s",
             args.T, args.out)
    return EXIT_OK


def _resolve_cli_lambda(args, batch) -> float:
    policy, value = parse_lambda_policy(args.lam)
    if policy == "fixed":
        return value
    if policy == "scaled":
        return lambda_scaled(value, batch.n, batch.k, batch.t)
    if args.game is None or args.exact is None:
        raise InvalidInputError(
            "--lambda theoretical needs --game and --exact to derive the bound")
    game = game_model.load_game(args.game)
    exact = load_batch(args.exact)
    if batch.noise is None:
        raise InvalidInputError("theoretical lambda needs a perturbed batch "
                                "with a recorded noise sigma")
    sigma = batch.noise.sigma
    report = check_assumptions(game, exact, sigma)
    if not (0 < report.alpha <= 1):
        raise GameRecoverError(
            f"incoherence margin alpha={report.alpha:.4f} outside (0, 1]")
    degrees = [len(game_model.in_neighbors(game, i)) for i in range(game.n)]
    s = max(max(degrees), 1)
    sc = game.n - 1 - s
    if sc < 1:
        raise InvalidInputError("theoretical lambda needs a non-neighbor set")
    val, _ = lambda_theoretical(k=game.k, s=s, sc=sc, t=batch.t, sigma=sigma,
                                b=game.budget, alpha=report.alpha,
                                w_max=report.w_max, w_min=report.w_min)
    return val


def _cmd_fit(args) -> int:
    batch = load_batch(args.batch)
    lam = _resolve_cli_lambda(args, batch)
    solver = SolverConfig(lam=lam)
    if args.config is not None:
        cfg = load_experiment_config(args.config)
        solver = SolverConfig(
            lam=lam, step_rule=cfg.solver.step_rule, tol_kkt=cfg.solver.tol_kkt,
            tol_rel_obj=cfg.solver.tol_rel_obj, max_iter=cfg.solver.max_iter,
            acceleration=cfg.solver.acceleration)
    fits = fit_all(batch, lam, solver, jobs=args.jobs)
    group_lasso.save_fits(fits, args.out)
    n_conv = sum(f.converged for f in fits.values())
    log.info("fitted %d players (%d converged) at lambda=%.6g",
             len(fits), n_conv, lam)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    game = game_model.load_game(args.game)
    fits = group_lasso.load_fits(args.fits)
    exact = load_batch(args.exact) if args.exact else None
    report = recovery.evaluate(game, fits, exact_batch=exact, sigma=args.sigma,
                               n_points=args.points, seed=args.seed)
    recovery.save_report(report, args.out)
    log.info("evaluate: f1=%.3f exact=%s containment=%.3f",
             report.f1, report.exact_structure, report.containment_rate)
    return EXIT_OK


def _cmd_check(args) -> int:
    game = game_model.load_game(args.game)
    batch = load_batch(args.batch)
    report = diagnostics.diagnostics_report(game, batch, args.sigma)
    diagnostics.save_diagnostics(report, args.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_experiment_config(args.config)
    out = args.out or cfg.output
    if out is None:
        raise InvalidInputError("sweep needs --out or an 'output' config entry")
    rows = run_sweep(cfg, jobs=args.jobs, timing=args.timing)
    write_results_csv(rows, out, timing=args.timing)
    n_err = sum(1 for r in rows if r.get("error"))
    log.info("sweep wrote %d rows (%d failed tasks) to %s", len(rows), n_err, out)
    return EXIT_OK


def _cmd_report(args) -> int:
    from .report import render_report

    written = render_report(args.results, args.out)
    log.info("report wrote %d files under %s", len(written), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="game-recover",
        description="Learn graphical-game structure and weights from noisy "
                    "equilibrium observations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="construct a random game")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", required=True, help="output game JSON")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("sample", help="draw exact and perturbed equilibria")
    p.add_argument("game", help="game JSON")
    p.add_argument("--T", type=int, required=True, help="number of samples")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--noise", choices=NOISE_FAMILIES, default="gaussian")
    p.add_argument("--scale", type=float, default=0.8,
                   help="equilibrium norm as a fraction of the budget")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("fit", help="fit all players on a perturbed batch")
    p.add_argument("batch", help="perturbed batch CSV")
    p.add_argument("--lambda", dest="lam", required=True,
                   help="float | theoretical | scaled:c")
    p.add_argument("--config", default=None, help="solver settings JSON")
    p.add_argument("--game", default=None, help="game JSON (theoretical lambda)")
    p.add_argument("--exact", default=None,
                   help="exact batch CSV (theoretical lambda)")
    p.add_argument("--jobs", type=int, default=1, help="0 = auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("evaluate", help="score fits against the true game")
    p.add_argument("game", help="true game JSON")
    p.add_argument("fits", help="fits JSON")
    p.add_argument("--exact", default=None,
                   help="exact batch CSV for delta/epsilon bounds")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--points", type=int, default=200,
                   help="equilibria sampled for containment")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("check", help="empirical incoherence diagnostics")
    p.add_argument("game", help="game JSON")
    p.add_argument("batch", help="batch CSV")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("sweep", help="run the configured experiment grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="results CSV path")
    p.add_argument("--jobs", type=int, default=1, help="0 = auto")
    p.add_argument("--timing", action="store_true",
                   help="append a non-canonical wall_time_ms column")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="figures and summary from sweep results")
    p.add_argument("results", help="sweep results CSV")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    try:
        _setup_logging()
        args = build_parser().parse_args(argv)
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error code={EXIT_CONFIG} message={exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error code={EXIT_IO} message={exc}", file=sys.stderr)
        return EXIT_IO
    except GameRecoverError as exc:
        print(f"error code={EXIT_NUMERIC} message={exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
