"""kinklab: kink solitons in (1+1)-dimensional scalar field theories.

Potentials with non-degenerate wells, heteroclinic kink profiles, the
asymptotic-stability criterion on the transformed potential
V = (W')^2/W - W'', linearized spectra with Darboux factorization, and
symplectic time evolution with modulation tracking.
"""
from .potentials import (AffineMap, Potential, PotentialError, WellPair,
                         WellReport, from_callbacks, load_potential,
                         make_family, normalize, perturb, transformed,
                         validate_wells)
from .kink import (BoostedKink, KinkError, KinkProfile, RepulsivityProfile,
                   boost, build_kink, repulsivity_profile)
from .criterion import (CriterionResult, ThresholdResult, classify,
                        lambda_schedule, level_set, sg_limit_report, sweep,
                        threshold_scan, wells_positivity)
from .spectral import (DiscreteOperator, EigenResult, SpectralError,
                       coercivity_estimate, convergence_study, discretize,
                       eigen_lowest, expansion_check, factorization_orders,
                       factorization_residual, null_directions,
                       quadratic_forms)
from .dynamics import (DynamicsError, FieldState, ModulationError, RunConfig,
                       conserved, local_distance, make_state, modulate,
                       rho_functional, run, step)

__version__ = "0.1.0"
