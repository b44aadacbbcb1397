"""Learning boolean functions of Markov-random-field inputs.

The package couples lazy single-site Gibbs samplers with exact desk-scale
spectral analysis: walk oracles over Ising models and proper colorings,
eigendecompositions of the reversible transition kernel, chain-smoothed
features for agnostic L1 regression, and a junta learner that reads its
relevant coordinates straight off a stationary walk.
"""

from .basis import (BasisFamily, BasisFunction, conjunction_family,
                    family_for_model, local_indicator_family, parity_family)
from .chain import (ChainOracle, LabeledWalk, default_burn_in, labeled_walk,
                    load_walk, sample_stationary_iid, save_walk)
from .errors import NumericalValidationError, SizeCapExceeded
from .features import (FeatureConfig, FeatureSet, build_feature_set,
                       geometric_times, hoeffding_T, load_feature_set,
                       save_feature_set)
from .learners import (AgnosticResult, Hypothesis, JuntaConditionsReport,
                       JuntaHypothesis, JuntaResult, LearnerConfig,
                       StabilityCurve, agnostic_learn, brute_force_opt_juntas,
                       correlation_decay_check, jensen_slack, junta_learn,
                       majority_function, noise_sensitivity_exact,
                       noise_sensitivity_sampled, stability_curve,
                       tail_mass_check, thm4_alpha, thm4_walk_length,
                       verify_junta_conditions)
from .models import (ColoringModel, CubeWalkModel, Graph, IsingModel,
                     cycle_graph, erdos_renyi_graph, grid_graph, hamiltonian,
                     load_model, make_graph, model_hash, save_model)
from .regression import (L1Problem, L1Solution, fit_l1, predict_linear,
                         solve_l1_regression)
from .rng import RngStream, derive_seed, draw_u64, mix64
from .spectral import (Spectrum, SupportIndex, detect_blocks, eigendecompose,
                       enumerate_support, exact_transition_matrix,
                       fourier_coefficients, reconstruct_eigenvectors,
                       spectrum_of, stationary_exact, theorem1_bounds,
                       useful_basis_alpha)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
