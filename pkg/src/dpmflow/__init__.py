"""Pseudo-spectral simulation of heat transport in a porous medium (DPM).

Temperature is advected by the divergence-free Darcy velocity it induces and
damped by a fractional Laplacian; the package integrates the system on the
periodic torus in 1 to 3 dimensions, verifies the analytic decay and
absorbing-ball estimates at runtime, and reproduces the closed-form
infinite-energy blow-up solutions of the 1D stream-slope reduction.
"""

from .blowup1d import (OracleParams, Regularization, StreamRecord,
                       StreamResult, StreamSlopeState, antiderivative,
                       blowup_time, check_max_bound, estimate_blowup_time,
                       integrate_amplitude_ode, oracle_beta, oracle_r,
                       run_stream_slope, stream_rhs)
from .config import ConfigError, RunConfig
from .diagnostics import (CheckResult, DiagnosticsRecord, check_absorbing_ball,
                          check_decay_torus, check_dissipation_budget,
                          compute_record, records_to_csv)
from .snapshots import read_snapshot, write_checkpoint, write_snapshot
from .solver import (BlowUpError, ForcingSpec, RunResult, SimulationState,
                     SolverParams, cfl_dt, enforce_mean, nonlinear_term,
                     resolution_tail, run, step)
from .spectral import (Domain, PhysicalField, SpectralField, dealias,
                       forward_transform, fractional_laplacian, hs_seminorm,
                       inverse_transform, lp_norm, partial_derivative,
                       random_field, refine, riesz_potential, riesz_transform)
from .velocity import (VelocityField, pressure_from_temperature,
                       velocity_from_temperature)

__version__ = "0.1.0"
