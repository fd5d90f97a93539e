"""postwalk: continuous-time quantum walks on networks under postselected
(nonlinear) Lindblad dynamics.

The engine integrates the conditioned master equation for node-basis walks
(on-site dephasing and edge-operator channels) and for single-excitation
spin transport, verifies converged states against analytic steady-state
conditions, and extracts relaxation times from stretched-exponential fits
of trace-distance decay.
"""

__version__ = "0.1.0"

from .graphs import (GraphSpec, NetworkGraph, build_grid_topology, build_simple_topology,
                     edge_list_csv, laplacian, remove_node)
from .nlme import (DensityState, InvariantViolation, JumpOperatorSet, NoiseChannel,
                   NonConvergenceError, SimConfig, SteadyStateResult, Tolerances,
                   Trajectory, evolve, haken_strobl_jump_set, hs_rhs_closed_form,
                   make_rhs, nlme_rhs_generic, qsw_jump_set, qsw_rhs_closed_form,
                   rk4_step, run_integration, steady_state, steady_state_run)
from .observables import (KwwFit, TrendFit, fit_stretched_exponential, fit_tau_vs_eta,
                          fit_tau_vs_p, gamma_function, kww_relaxation_time,
                          l1_coherence, trace_distance)
from .spin import (SpinConfig, SpinSystem, SpinTrajectory, concurrence_matrix,
                   evolve_spin, excitation_populations, max_concurrence,
                   pairwise_concurrence, spin_hop_jump_set, spin_nlme_rhs,
                   spin_steady_state_run, xy_hamiltonian)
from .steady import (ConstraintReport, constraint_residual, hs_steady_state_prediction,
                     uniform_condition_holds)
