"""sdrkit: linear and kernel sufficient dimension reduction with radial-kernel screening."""

from .kernels import (
    GramMatrix,
    RadialKernel,
    ScaleMixture,
    bandwidth_heuristic,
    center_gram,
    elliptic_cf,
    eval_kernel,
    gaussian,
    generalized_cauchy,
    gram,
    kernel_from_mixture,
    matern,
    omega_p,
    parse_kernel_spec,
    powered_exponential,
    psi_from_mixture,
    read_mixture,
)
from .numerics import bessel_j, bessel_k, check_complete_monotone, gamma_fn
from .schoenberg import certify_membership, nesting_check, psd_sweep, radiality_probe
from .sdr import (
    SdrModel,
    fit_gsir,
    fit_kcca,
    fit_ksir,
    fit_sir,
    gcv_select,
    load_model,
    predict,
    ridge_param,
    save_model,
)
from .sim import ExperimentConfig, aggregate, run_experiment, run_replication, spearman

__version__ = "0.1.0"
