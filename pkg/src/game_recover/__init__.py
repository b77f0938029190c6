"""game_recover: learn graphical-game structure from noisy equilibria.

The pipeline: `game_generator` builds sparse games with a planted
equilibrium ray, `equilibrium_sampler` draws exact equilibria and adds
sub-Gaussian noise, `group_lasso` fits blockwise-sparse best-response
weights per player, `diagnostics` checks the recovery conditions, and
`recovery` scores structure and equilibrium containment.  `harness` and
`cli` wire everything into seeded, reproducible experiments.
"""

from .block_norms import (RowBlockMatrix, norm_b_inf_1, norm_b_inf_f,
                          norm_frobenius, norm_inf_2, norm_inf_inf,
                          norm_spectral, uniform_partition)
from .errors import (GameRecoverError, GenerationError, InvalidInputError,
                     NoEquilibriumError, NumericalError)
from .game_model import (GraphicalGame, assemble, best_response_residual,
                         in_neighbors, is_epsilon_psne, load_game, payoff,
                         save_game)
from .game_generator import AssumptionReport, GeneratorConfig, \
    check_assumptions, generate, spectral_radius
from .equilibrium_sampler import (NoiseSpec, SampleBatch, equilibrium_basis,
                                  load_batch, noise_stream, perturb,
                                  sample_equilibria, save_batch)
from .group_lasso import (FitResult, SolverConfig, block_soft_threshold, fit,
                          fit_all, kkt_residual, lambda_max,
                          lambda_theoretical, load_fits, save_fits)
from .diagnostics import (DiagnosticsReport, check_lemma1,
                          check_subexponential, diagnostics_report,
                          empirical_h, population_h, sample_incoherence)
from .recovery import (RecoveryReport, containment_eps, delta_bound,
                       epsilon_bound, evaluate, game_from_fits, param_error,
                       recover_structure, verify_containment)

__version__ = "0.1.0"
