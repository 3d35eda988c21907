"""Simulation laboratory for small-data blow-up in a three-component
quadratic derivative nonlinear Schrodinger system.

The package follows the analytic route: an exponential substitution turns
the third (derivative-quadratic) equation into a linear Schrodinger
equation with a quadratic source, giving a globally smooth triangular
chain; blow-up of the original system happens exactly when the chain's
third component touches 1 in sup norm.  Profile coordinates turn the chain
into a pointwise ODE in frequency, making lifespans of order eps^-4 and
eps^-6 reachable, and a direct pseudo-spectral solver cross-checks the
construction at validation scale.
"""

from .cases import (MassTriple, NonlinearityCase, Quadratic,
                    gauge_condition_holds, homogeneity_holds)
from .chain import ChainEvaluator, QuadratureError, initial_data, solve_chain
from .fullsolver import (FullTrajectory, NonlinearOverflowError,
                         SolverControls, cross_validate, evolve_full,
                         nonlinearity)
from .grids import (Field, Grid, SupportEscapeError, check_support,
                    gaussian_field, trig_interpolate)
from .hopfcole import (BlowupData, BlowupReachedError, build_blowup_data,
                       normalize_profile, reconstruct_u, sigma_from_u3,
                       u3_from_sigma)
from .lifespan import (LifespanRecord, NoCrossingError, SweepResult,
                       detect_lifespan, detune_experiment,
                       gaussian_profile, general_data_lower_bound_probe,
                       sweep)
from .operators import (apply_J, deform_W, factorization_residual,
                        fourier_m, free_propagate, identity_suite,
                        leibniz_residuals, profile_A, rho_norm,
                        sobolev_norm, w_decay_statistic)
from .profiles import (ChainState, GrowthFit, IntegrationControls,
                       ProfileTrajectory, asymptotic_profile, bootstrap,
                       fit_growth_exponent, integrate)
from .virial import (FieldND, IdentityReport, VirialState, WaveControls,
                     check_identities, energy_E, energy_sign_threshold,
                     evolve_3wave, virial_V)

__version__ = "0.1.0"
