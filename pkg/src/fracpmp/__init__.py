"""Maximum-principle toolkit for Caputo fractional delay systems and
delayed Volterra equations with weakly singular kernels."""

from .adjoint import (AdjointSourceConvention, duality_gap, duality_terms,
                      fractional_ibp_sides, solve_adjoint_fdde,
                      solve_adjoint_vide)
from .config import LinearProblemConfig, dump_config, load_config, load_problem
from .core import (AdjointTrajectory, Box, ControlSet, ControlSignal,
                   FddeProblem, Finite, Grid, LinearDynamics, Trajectory,
                   VideProblem, control_project, grid_make, problem_grid, rho)
from .errors import (ConfigError, Divergence, FracPmpError,
                     InadmissibleDirection, InvalidArgument, NonAlignedHorizon,
                     NotConverged, NumericalBlowup, OutOfDomain, SingularPoint)
from .example4 import run_example4
from .fdde import (FddeSolverOptions, Scheme, caputo_l1_derivative,
                   fdde_residual, solve_fdde, solve_linear_fdde,
                   solve_variational)
from .gronwall import GronwallData, picard_bound
from .kernels import BACKEND
from .pmp import (Kind, PmpReport, SweepParams, SweepResult,
                  forward_backward_sweep, gateaux_check, hamiltonian_fdde,
                  hamiltonian_vide, maximize_hamiltonian, objective,
                  pmp_residual)
from .specfun import (delay_control_kernel, delayed_power_series, gamma_fn,
                      kernel_increments, linear_pure_delay_response,
                      x_alpha_pure_delay_series)
from .volterra import SingularWeights, singular_weights, solve_vide

__version__ = "0.1.0"
