import numpy as np
import pytest

from game_recover import (GeneratorConfig, GraphicalGame, InvalidInputError,
                          NoiseSpec, SampleBatch, assemble, check_assumptions,
                          equilibrium_basis, generate, in_neighbors,
                          sample_equilibria, spectral_radius)


def test_config_validation():
    with pytest.raises(InvalidInputError):
        GeneratorConfig(n=1, k=1, d=1, weight_low=0.1, weight_high=0.2, seed=0)
    with pytest.raises(InvalidInputError):
        GeneratorConfig(n=3, k=1, d=3, weight_low=0.1, weight_high=0.2, seed=0)
    with pytest.raises(InvalidInputError):
        GeneratorConfig(n=3, k=1, d=1, weight_low=0.3, weight_high=0.2, seed=0)
    with pytest.raises(InvalidInputError):
        GeneratorConfig(n=3, k=1, d=1, weight_low=0.0, weight_high=0.2, seed=0)


def test_spectral_radius_known_matrices():
    assert spectral_radius(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(1.0)
    # eigenvalues +-1: the periodic case plain power iteration oscillates on
    assert spectral_radius(np.array([[0.0, 2.0], [0.5, 0.0]])) == pytest.approx(1.0)
    # nilpotent: the dominant eigenvalue is defective, so power iteration
    # converges only polynomially; accuracy ~ 1/max_iter
    assert spectral_radius(np.array([[0.0, 1.0], [0.0, 0.0]])) == pytest.approx(
        0.0, abs=2e-4)
    assert spectral_radius(np.diag([1.0, 2.0])) == pytest.approx(2.0)
    with pytest.raises(InvalidInputError):
        spectral_radius(np.array([[-1.0]]))


def test_two_player_unit_weights():
    cfg = GeneratorConfig(n=2, k=1, d=1, weight_low=1.0, weight_high=1.0, seed=0)
    game = generate(cfg)
    wbar = assemble(game)
    assert np.allclose(wbar, [[0.0, 1.0], [1.0, 0.0]])
    basis = equilibrium_basis(game)
    assert basis.shape == (2, 1)
    direction = basis[:, 0] * np.sign(basis[0, 0])
    assert np.allclose(direction, np.full(2, 1 / np.sqrt(2)), atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_generate_postconditions(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 12))
    k = int(rng.integers(1, 3))
    d = int(rng.integers(1, min(n - 1, 4) + 1))
    cfg = GeneratorConfig(n=n, k=k, d=d, weight_low=0.3, weight_high=0.7,
                          seed=seed)
    game = generate(cfg)
    for i in range(n):
        assert len(in_neighbors(game, i)) == min(d, n - 1)
    wbar = assemble(game)
    assert spectral_radius(wbar) == pytest.approx(1.0, abs=1e-8)
    # cross-check against a full eigendecomposition
    assert np.abs(np.linalg.eigvals(wbar)).max() == pytest.approx(1.0, abs=1e-8)
    # entries stay positive after the rescale (support preserved)
    for w in game.blocks.values():
        assert np.all(w > 0)
    # the planted kernel is detectable
    assert equilibrium_basis(game).shape[1] >= 1


def test_generate_deterministic():
    cfg = GeneratorConfig(n=6, k=2, d=2, weight_low=0.3, weight_high=0.7, seed=11)
    g1, g2 = generate(cfg), generate(cfg)
    assert g1.edges() == g2.edges()
    for e in g1.edges():
        assert np.array_equal(g1.blocks[e], g2.blocks[e])


def test_check_assumptions_zero_batch():
    game = GraphicalGame(n=3, k=1, budget=1.0, blocks={
        (0, 1): np.array([[0.5]]), (1, 2): np.array([[0.5]]),
        (2, 0): np.array([[0.5]])})
    zeros = SampleBatch(data=np.zeros((4, 3)), n=3, k=1, kind="exact", seed=0)
    report = check_assumptions(game, zeros, sigma=1.0)
    assert report.alpha == pytest.approx(1.0)
    assert report.c_min == pytest.approx(1.0)
    assert report.budget_ok and report.zero_utility_ok
    assert report.w_max == pytest.approx(0.5)
    assert report.w_min == pytest.approx(0.5)


def test_check_assumptions_empty_complement():
    cfg = GeneratorConfig(n=2, k=1, d=1, weight_low=1.0, weight_high=1.0, seed=0)
    game = generate(cfg)
    basis = equilibrium_basis(game)
    batch = sample_equilibria(game, basis, 32, seed=1)
    report = check_assumptions(game, batch, sigma=0.5)
    # each player's only other player is its neighbor: alpha = 1 by convention
    assert report.alpha == pytest.approx(1.0)


@pytest.mark.parametrize("sigma", [0.1, 1.0])
def test_check_assumptions_c_min_floor(sigma):
    cfg = GeneratorConfig(n=8, k=2, d=3, weight_low=0.3, weight_high=0.7, seed=5)
    game = generate(cfg)
    basis = equilibrium_basis(game)
    batch = sample_equilibria(game, basis, 200, seed=6)
    report = check_assumptions(game, batch, sigma=sigma)
    # support restriction of PSD + sigma^2 I keeps eigenvalues above sigma^2
    assert report.c_min >= sigma ** 2 - 1e-10
    assert all(c >= sigma ** 2 - 1e-10 for c in report.c_min_per_player)


def test_check_assumptions_requires_exact():
    cfg = GeneratorConfig(n=4, k=1, d=1, weight_low=0.3, weight_high=0.7, seed=2)
    game = generate(cfg)
    basis = equilibrium_basis(game)
    batch = sample_equilibria(game, basis, 16, seed=3)
    from game_recover import perturb
    noisy = perturb(batch, NoiseSpec("gaussian", 0.1), 4)
    with pytest.raises(InvalidInputError):
        check_assumptions(game, noisy, sigma=0.1)
