"""1-D bond-based peridynamics: nonlinear and linearized models, the local wave
equation, and convergence-study drivers."""

from ._kernels import BACKEND
from .analysis import (difference_norms, loglog_slope, norm_l2, norm_sup, rate_from_eps_pair,
                       rate_from_triplet, restrict_to_coarse)
from .assembly import (BandedSymmetricOperator, assemble, cfl_dt, exact_spectrum,
                       gershgorin_bound, stability_report, stable_dt, stieltjes_check)
from .config import ConfigError, ExperimentSpec, load_spec
from .force import (ForceEvaluator, consistency_force_gap, continuum_force, force_linearized,
                    force_local, force_nonlinear)
from .grid import Grid1D, LocalGrid, NodalField, build_grid, build_local_grid, grid_from_eps, interpolate
from .integrator import (BlowupError, InitialData, UnstableTimestepError, kickoff, make_problem,
                         run, simulate, step)
from .material import (ExponentialInfluence, ExponentialPotential, MaterialModel, default_model)
from .quadrature import QuadratureRule

__version__ = "0.1.0"
