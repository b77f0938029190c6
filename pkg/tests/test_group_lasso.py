import numpy as np
import pytest

from game_recover import (GeneratorConfig, InvalidInputError, NoiseSpec,
                          RowBlockMatrix, SampleBatch, SolverConfig,
                          block_soft_threshold, equilibrium_basis, fit,
                          fit_all, generate, kkt_residual, lambda_max,
                          lambda_theoretical, load_fits, perturb,
                          sample_equilibria, save_fits, uniform_partition)
from helpers import (lambda_threshold_reference, loss_value,
                     make_random_instance)

TIGHT = SolverConfig(lam=0.0, tol_rel_obj=1e-16)


def tight(lam, **kw):
    return SolverConfig(lam=lam, tol_rel_obj=1e-16, **kw)


def test_soft_threshold_examples():
    v = np.array([[0.3, 0.1], [0.2, -0.1]])
    assert np.array_equal(block_soft_threshold(v, 1.0), np.zeros((2, 2)))
    assert np.array_equal(block_soft_threshold(v, 0.0), v)
    out = block_soft_threshold(2.0 * np.eye(2), np.sqrt(2.0))
    assert np.allclose(out, np.eye(2), atol=1e-15)
    # exactly at the threshold the block is zeroed
    assert np.array_equal(
        block_soft_threshold(np.eye(1), 1.0), np.zeros((1, 1)))
    with pytest.raises(InvalidInputError):
        block_soft_threshold(v, -0.1)


def test_lam_zero_reduces_to_least_squares():
    rng = np.random.default_rng(0)
    batch = make_random_instance(rng, n=2, k=1, t=40)
    fr = fit(batch, 0, tight(0.0))
    xj = batch.player(1)[:, 0]
    xi = batch.player(0)[:, 0]
    ols = float(xj @ xi) / float(xj @ xj)
    assert fr.converged
    assert fr.w_hat.data[0, 0] == pytest.approx(ols, abs=1e-9)


def test_zero_solution_threshold_exact():
    rng = np.random.default_rng(1)
    for trial in range(10):
        batch = make_random_instance(rng, n=int(rng.integers(2, 5)),
                                     k=int(rng.integers(1, 3)),
                                     t=int(rng.integers(10, 40)))
        i = int(rng.integers(0, batch.n))
        lmax = lambda_max(batch, i)
        at = fit(batch, i, tight(lmax))
        above = fit(batch, i, tight(lmax * 1.000001))
        below = fit(batch, i, tight(lmax * 0.9))
        assert not np.any(at.w_hat.data)
        assert not np.any(above.w_hat.data)
        assert len(below.active_blocks) > 0
        assert at.active_blocks == frozenset()


def test_matches_subgradient_oracle():
    from oracles import subgradient_objective

    rng = np.random.default_rng(2)
    for trial in range(5):
        batch = make_random_instance(rng, n=int(rng.integers(2, 5)),
                                     k=int(rng.integers(1, 3)),
                                     t=int(rng.integers(20, 51)))
        lam = [0.01, 0.1, 1.0][trial % 3]
        fr = fit(batch, 0, tight(lam))
        oracle = subgradient_objective(batch, 0, lam, iters=200_000)
        assert fr.converged and fr.kkt_residual <= 1e-8
        assert abs(fr.objective - oracle) <= 1e-6


def test_objective_matches_direct_sum():
    rng = np.random.default_rng(3)
    batch = make_random_instance(rng, n=3, k=2, t=25)
    fr = fit(batch, 1, tight(0.05))
    direct = loss_value(batch, 1, fr.w_hat.data, 0.05)
    assert fr.objective == pytest.approx(direct, rel=1e-10)


def test_kkt_residual_cases():
    rng = np.random.default_rng(4)
    batch = make_random_instance(rng, n=3, k=2, t=30)
    m = (batch.n - 1) * batch.k
    part = uniform_partition(m, batch.k)
    zero = RowBlockMatrix(np.zeros((m, batch.k)), part)
    lmax = lambda_max(batch, 0)
    assert kkt_residual(batch, 0, zero, lmax) == 0.0
    assert kkt_residual(batch, 0, zero, lmax * 2) == 0.0
    assert kkt_residual(batch, 0, zero, lmax * 0.5) > 0.0

    fr = fit(batch, 0, tight(0.1))
    assert fr.converged
    assert kkt_residual(batch, 0, fr.w_hat, 0.1) <= 1e-8


def test_kkt_gradient_against_finite_differences():
    rng = np.random.default_rng(5)
    batch = make_random_instance(rng, n=3, k=1, t=20)
    m = batch.n - 1
    w = rng.standard_normal((m, 1)) * 0.3
    part = uniform_partition(m, 1)
    # at lam=0 the residual is the max blockwise gradient norm
    analytic = kkt_residual(batch, 0, RowBlockMatrix(w, part), 0.0)

    def loss(wv):
        return loss_value(batch, 0, wv.reshape(m, 1), 0.0)

    eps = 1e-6
    grad = np.zeros(m)
    for r in range(m):
        up, down = w.copy().ravel(), w.copy().ravel()
        up[r] += eps
        down[r] -= eps
        grad[r] = (loss(up) - loss(down)) / (2 * eps)
    assert analytic == pytest.approx(np.abs(grad).max(), abs=1e-6)


def test_monotone_descent_without_acceleration():
    rng = np.random.default_rng(6)
    batch = make_random_instance(rng, n=4, k=2, t=30)
    cfg = SolverConfig(lam=0.05, acceleration=False, step_rule="backtracking",
                       tol_rel_obj=1e-16, max_iter=400)
    fr = fit(batch, 0, cfg)
    # objective at the output is no worse than at the start (w = 0)
    start = loss_value(batch, 0, np.zeros_like(fr.w_hat.data), 0.05)
    assert fr.objective <= start + 1e-12


def test_backtracking_matches_fixed_step():
    rng = np.random.default_rng(7)
    batch = make_random_instance(rng, n=3, k=2, t=40)
    a = fit(batch, 0, tight(0.02))
    b = fit(batch, 0, tight(0.02, step_rule="backtracking"))
    assert a.objective == pytest.approx(b.objective, abs=1e-9)
    assert a.active_blocks == b.active_blocks


def test_sample_order_invariance():
    rng = np.random.default_rng(8)
    batch = make_random_instance(rng, n=3, k=2, t=30)
    perm = rng.permutation(batch.t)
    shuffled = SampleBatch(data=batch.data[perm], n=batch.n, k=batch.k,
                           kind="perturbed", seed=0, noise=batch.noise)
    a = fit(batch, 0, tight(0.05))
    b = fit(shuffled, 0, tight(0.05))
    assert np.allclose(a.w_hat.data, b.w_hat.data, atol=1e-9)


def test_warm_start_agrees_with_cold_start():
    rng = np.random.default_rng(9)
    batch = make_random_instance(rng, n=4, k=1, t=35)
    first = fit(batch, 0, tight(0.2))
    warm = fit(batch, 0, tight(0.1), w0=first.w_hat.data)
    cold = fit(batch, 0, tight(0.1))
    assert warm.objective == pytest.approx(cold.objective, abs=1e-9)
    assert warm.active_blocks == cold.active_blocks


def test_non_finite_batch_rejected():
    rng = np.random.default_rng(10)
    data = rng.standard_normal((5, 4))
    data[2, 1] = np.nan
    batch = SampleBatch(data=data, n=2, k=2, kind="perturbed", seed=0)
    with pytest.raises(InvalidInputError):
        fit(batch, 0, TIGHT)


def test_fit_all_symmetric_game():
    game_cfg = GeneratorConfig(n=2, k=1, d=1, weight_low=1.0, weight_high=1.0,
                               seed=0)
    game = generate(game_cfg)
    basis = equilibrium_basis(game)
    exact = sample_equilibria(game, basis, 60, seed=1)
    # symmetric noise: same stream applied to both coordinates
    rng = np.random.default_rng(2)
    e = rng.standard_normal((60, 1)) * 0.1
    data = exact.data + np.hstack([e, e])
    batch = SampleBatch(data=data, n=2, k=1, kind="perturbed", seed=0,
                        noise=NoiseSpec("gaussian", 0.1))
    fits = fit_all(batch, 0.05, TIGHT)
    assert set(fits) == {0, 1}
    assert fits[0].w_hat.data == pytest.approx(fits[1].w_hat.data)
    assert fits[0].objective == pytest.approx(fits[1].objective)


def test_fit_all_parallel_is_bit_identical():
    rng = np.random.default_rng(11)
    batch = make_random_instance(rng, n=5, k=2, t=40)
    seq = fit_all(batch, 0.05, TIGHT, jobs=1)
    par = fit_all(batch, 0.05, TIGHT, jobs=3)
    assert set(seq) == set(par)
    for i in seq:
        assert np.array_equal(seq[i].w_hat.data, par[i].w_hat.data)
        assert seq[i].objective == par[i].objective
        assert seq[i].iterations == par[i].iterations


def test_fit_all_per_player_lambda_and_errors():
    rng = np.random.default_rng(12)
    batch = make_random_instance(rng, n=3, k=1, t=20)
    lams = {0: 0.01, 1: 10.0, 2: 0.05}
    fits = fit_all(batch, lams, TIGHT)
    assert fits[1].lam == 10.0
    assert all(f.error is None for f in fits.values())


def test_lambda_theoretical_limits():
    val, terms = lambda_theoretical(k=2, s=3, sc=16, t=10_000, sigma=0.1,
                                    b=1.0, alpha=1.0, w_max=0.6, w_min=0.2)
    # alpha = 1 kills every (1-alpha)-prefixed term
    assert terms[0] == terms[1] == terms[2] == terms[3] == terms[9] == 0.0
    assert val == max(terms[4:9] + (terms[10],))

    # T -> infinity leaves only the two T-free noise terms
    val_inf, terms_inf = lambda_theoretical(k=2, s=3, sc=16, t=10 ** 18,
                                            sigma=0.1, b=1.0, alpha=0.5,
                                            w_max=0.6, w_min=0.2)
    assert val_inf == pytest.approx(max(terms_inf[9], terms_inf[10]), rel=1e-6)
    assert terms_inf[9] == pytest.approx(24 * 0.5 * 0.01 * np.sqrt(2) * 0.6 / 0.5)
    assert terms_inf[10] == pytest.approx(24 * 0.01 * 2 * 0.6 / 0.5)


def test_lambda_theoretical_against_reference():
    cases = [
        (2, 3, 16, 10_000, 0.1, 1.0, 0.5, 0.6, 0.2),
        (1, 1, 5, 500, 0.3, 2.0, 0.9, 1.1, 0.4),
        (3, 4, 40, 100_000, 0.05, 1.0, 0.25, 0.8, 0.1),
    ]
    for args in cases:
        val, _ = lambda_theoretical(*args)
        assert val == pytest.approx(lambda_threshold_reference(*args), abs=1e-12)


def test_lambda_theoretical_validation():
    with pytest.raises(InvalidInputError):
        lambda_theoretical(2, 3, 16, 100, 0.1, 1.0, 0.0, 0.6, 0.2)
    with pytest.raises(InvalidInputError):
        lambda_theoretical(2, 3, 16, 100, 0.1, 1.0, 1.5, 0.6, 0.2)
    with pytest.raises(InvalidInputError):
        lambda_theoretical(2, 0, 16, 100, 0.1, 1.0, 0.5, 0.6, 0.2)


def test_fits_round_trip(tmp_path):
    rng = np.random.default_rng(13)
    batch = make_random_instance(rng, n=4, k=2, t=30)
    fits = fit_all(batch, 0.08, TIGHT)
    path = tmp_path / "fits.json"
    save_fits(fits, path)
    back = load_fits(path)
    assert set(back) == set(fits)
    for i in fits:
        assert np.array_equal(back[i].w_hat.data, fits[i].w_hat.data)
        assert back[i].objective == fits[i].objective
        assert back[i].kkt_residual == fits[i].kkt_residual
        assert back[i].converged == fits[i].converged
        assert back[i].active_blocks == fits[i].active_blocks
