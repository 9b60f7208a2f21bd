"""stabkit: desk-scale stability laboratory for weakly coupled damped systems.

A system of N second-order fields coupled through displacements and damped
through a possibly rank-deficient control matrix keeps its energy decaying
polynomially as long as the control reaches every component through the
coupling (full Kalman rank of the controllability block matrix).  This
package assembles 1-D finite-difference realizations of such systems,
measures their spectra, resolvent growth, and energy decay, and checks the
matrix algebra that carries the damping across components.
"""
from .branches import (BranchPoint, DEMO_CONTROL, DEMO_COUPLING, TIP_CONTROL,
                       TIP_COUPLING, kelvin_voigt_branch, predicted_kelvin_voigt,
                       predicted_tip, predicted_viscous, tip_branch,
                       tip_branch_secondary, tip_characteristic, viscous_branch)
from .discretize import (BEAM_CLAMPED, BOUNDARY_TIP, KELVIN_VOIGT, VISCOUS,
                         WAVE_DIRICHLET, WAVE_TIP, DampingKind, Generator,
                         Grid1D, ModelSpec, StiffnessKind, assemble_damping,
                         assemble_generator, assemble_stiffness,
                         boundary_tip_damping, energy_product,
                         kelvin_voigt_damping, viscous_damping)
from .evolve import (DecayReport, FitResult, MidpointStepper, State,
                     calibrate_window, decay_study, excited_abscissa,
                     fit_decay_exponent, graph_norm, simulate,
                     smooth_initial_state, step_cn)
from .fileio import (Scenario, SchemaError, load_matrix, load_scenario,
                     model_from_dict, model_to_dict, save_matrix,
                     scenario_from_dict, write_csv, write_json)
from .kalman import (BlockPartition, CouplingPair, EigenGroups,
                     SpectralFactorD, block_partition, coercivity_constant,
                     coercivity_slack, commutator_norm, construct_min_rank_D,
                     controllability_matrix, coupling_pair, eig_group,
                     kalman_rank, lift_pair, max_invariant_dim,
                     spectral_factor, verify_coercivity)
from .spectra import (ConvergenceError, ModePencil, ResolventScan,
                      SpectrumReport, discrete_frequencies, eig_all,
                      modal_reduce, optimality_exponent,
                      quadratic_pencil_roots, resolvent_scan,
                      spectral_abscissa, spectrum_report)

__version__ = "0.1.0"
