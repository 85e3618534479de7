"""Adaptive dynamics for trait- and age-structured populations.

Modeling hierarchy: exact individual-based simulation, age-structured
transport demography with stationary equilibria, implicit invasion fitness,
the trait substitution sequence, the canonical equation, Monte-Carlo and
generating-function oracles, and the argument-principle stability check.
"""

__version__ = "0.1.0"

from .models import (REGISTRY, ModelSpec, TruncatedGaussianKernel, make_model)
from .demography import (AgeDensity, AgeGrid, Equilibrium, FrozenDeathRate,
                         balance_residual, check_non_coexistence_logistic,
                         frozen_death_rate, integrate_dimorphic,
                         integrate_monomorphic, net_reproduction_rate,
                         stationary_equilibrium, viability_window)
from .fitness import (FitnessReport, FitnessSolver, PipGrid, SingularityReport,
                      classify_singularity, classify_singularity_from_g,
                      extinction_probability, fitness_gradient_generic,
                      invasion_boundary_example1, invasion_boundary_no_senescence,
                      invasion_integral, pip)
from .ibm import (EventLog, IbmResult, PopulationState, age_histogram,
                  bounded_lipschitz_distance, initial_population,
                  population_from_density, simulate)
from .tss import TssPath, TssState, simulate_tss, tss_jump_rate_density
from .canonical import (CanonicalTrajectory, canonical_rhs, integrate_canonical,
                        rescaled_tss_mean_path)
from .verify import (BranchingReport, LinearBranchingSpec, clopper_pearson,
                     generation_gw_extinction, malthusian_exponent,
                     simulate_linear_branching, spec_from_invasion)
from .stability import (JordanContour, WindingReport, lambda_function,
                        stability_scan, winding_number)
from .errors import (AgedynError, ConfigError, ExplosionError, NumericError,
                     ViabilityError)
