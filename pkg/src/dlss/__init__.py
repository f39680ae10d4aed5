"""Fourier-Galerkin simulation of DLSS-type thin-film equations with Wiener-norm certificates."""

from .config import ConfigError, InitRecipe, RunConfig, gen_initial_data, load_config, parse_config
from .integrator import BlowUpError, IntegrationResult, StepperConfig, integrate, phi_functions, step
from .models import EvalMode, ModelParams, derived_params, full_rhs, linear_symbol, nonlinear_rhs, rhs_rational, rhs_taylor
from .runner import oracle_compare, run_experiment, sweep
from .theory import (
    CertificateResult,
    Diagnostics,
    TheoremReport,
    certify_run,
    check_condition,
    critical_amplitude,
    eval_P1,
    eval_P2,
    snapshot,
)
from .wiener import (
    Lattice,
    SpectralField,
    analytic_norm,
    convolve,
    derivative,
    from_grid,
    linf_norm,
    load_checkpoint,
    make_field,
    save_checkpoint,
    to_grid,
    wiener_norm,
    wiener_norms,
)

__version__ = "0.1.0"
