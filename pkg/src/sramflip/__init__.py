"""Noise-induced bit-flip times of bistable retention cells.

A surrogate cross-coupled-inverter cell is reduced to a 1D drift-diffusion
model along the line from the threatened stable state to the saddle.  Mean
time to failure is estimated by Monte Carlo (reduced and full model) and by
closed-form near-equilibrium formulas and the exact mean first-passage
integral.
"""

from .circuit import (KB, CellParams, Equilibria, StatePoint, critical_offset, drift_field,
                      find_equilibria, inverter_vtc, node_noise_sigma)
from .errors import (ConvergenceError, DegenerateAxisError, DomainError, EmptyEnsembleError, EnsembleError,
                     MonostableError, NonMonotoneError, NotConvergedError, ParseError, TruncationWarning,
                     ValidationError)
from .estimators import EstimatorResult, kish_mttf, nobile_mttf, siegert_mttf
from .extraction import (DriftTable, PotentialTable, Trajectory, extend_negative, extract_cell, extract_drift,
                         quasi_potential, relax_trajectory)
from .projection import ProjectionAxis, embed, make_axis, project
from .sde import (MttfEstimate, SdeModel1D, Simulator1D, Simulator2D, TtfEnsemble, mttf_stats, run_ensemble,
                  simulate_path_1d, simulate_path_2d)

__version__ = "0.1.0"
