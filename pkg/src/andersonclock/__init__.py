"""Eigenvalue statistics for 1D disordered chains with decaying site coupling.

Two independent spectral routes (phase root-finding and Sturm bisection)
feed rescaled local point processes, clock-spacing ensembles, and the tail
diagnostics that support them.
"""

__version__ = "0.1.0"

from .model import (CouplingVariant, DisorderDistribution, DisorderRealization,
                    ModelParams, TridiagonalOperator, ValidationError,
                    build_hamiltonian, coupling, coupling_sequence,
                    realization_to_csv, sample_disorder, site_potential)
from .pruefer import (DEFAULT_THETA_TOL, BoundaryAmbiguityWarning, BracketError,
                      EigenphaseRoot, PrueferTrace, RatioTrace, drift_checkpoints,
                      eigenphase_count, lipschitz_bound, locate_eigenphase,
                      phase_drift, phase_neighborhood_halfwidth, phase_step,
                      pruefer_spectrum, pruefer_sweep, ratio_sweep, roots_to_csv,
                      trace_to_csv)
from .sturm import (ConditioningWarning, SpectralQuery, bisect_eigenvalues,
                    eigenvalues_to_csv, full_interval, resolvent_corner, sturm_count)
from .stats import (ClockExperimentResult, EnsembleSpec, OracleMismatchError,
                    PointProcessSample, SpacingStats, TailDiagnostics,
                    WindowCollisionError, circular_variance_mod_pi,
                    clock_spacing_experiment, diagnostics_to_csv,
                    evaluate_linear_statistic, local_point_process,
                    measured_offset, phase_convergence_diagnostic,
                    resonant_subsequence, spacings_to_csv, tail_exit_index)

__all__ = [name for name in dir() if not name.startswith("_")]
