"""Complex Monge-Ampere solves and estimate verification on flat tori."""

from .grid import (FourierTerm, PeriodicGrid, ScalarField, fourier_field,
                   integrate, lp_norm, random_fourier_terms, resample, zeros)
from .forms import (HermitianField, MetricField, PositivityViolation,
                    complex_hessian, identity_metric, ricci_form, trace_wrt)
from .ma_core import (Family, MAProblem, cone_min_eig, forward_density,
                      linearized_apply, perturbed_metric, residual)
from .elliptic import (IncompatibleRHS, LinearOperatorSpec, NoConvergence,
                       SpectrumHit, apply_operator, green_apply, solve,
                       spectral_gap)
from .continuity import (ConeExit, ContinuityPath, NewtonConfig, PathRecord,
                         PathStalled, newton_solve, run_path, write_path_csv)
from .estimates import (build_report, c0_max_principle, c2_bounds, c3_tensor,
                        energy_identity, log_trace_inequality,
                        lp_sweep, moser_ladder_report, prescribed_ricci_check,
                        uniqueness_check)
from .oracle import ManufacturedCase, SingularMatrix, dense_newton, registry
from .report import EstimateReport, ReportEntry
from .serialize import load_field, save_field, save_field_csv

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
