"""rhlab: a desk-scale numerical laboratory for compressible isentropic
radiation hydrodynamics (discrete-ordinates transfer coupled to viscous flow
with vacuum), with fixed-point time-slab integration and regularity
diagnostics."""

from .config import RunConfig, parse_config, serialize_config
from .diagnostics import (blowup_monitor, compatibility_check,
                          compatibility_residual, farfield_bounds_check,
                          mass_total, phi, theta)
from .errors import (ConfigError, DomainError, IterationError, ParameterError,
                     RHLabError, ShapeError, SolverError, StepSizeError)
from .grid import (AngularQuadrature, FrequencyGrid, Grids, SpatialGrid,
                   divergence, gradient, integrate_radiation, integrate_space)
from .norms import NormSettings, lp_norm, mixed_radiation_norm, sobolev_norm
from .physics import (CoefficientModel, EquationOfState, PhysicalConstants,
                      ViscosityParams, compton_model, constant_model, pressure,
                      validate_emission_regularity, validate_kernel_integrability,
                      validate_sigma_regularity, zero_model)
from .picard import (DeltaSchedule, PicardDiagnostics, SlabConfig, State,
                     Trajectory, delta_continuation, gamma_metric, solve,
                     solve_slab)
from .runner import check_compat, run_scenario, validate_model
from .scenarios import builtin_scenarios
from .transport import (collision_term, linearized_collision_term,
                        momentum_source, radiation_flux,
                        radiation_pressure_tensor, transport_step)

__version__ = "0.1.0"
