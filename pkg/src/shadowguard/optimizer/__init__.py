"""Optimization layer: closed-form entropy references, gradients, VQE loops and depth scans."""

from shadowguard.optimizer.entropy import (
    WbpConfig,
    haar_average_purity,
    page_entropy_asymptotic,
    page_entropy_exact,
    wbp_check,
)
from shadowguard.optimizer.gradients import (
    ShadowEnergyEvaluator,
    energy_and_gradient,
    exact_energy,
    gd_step,
    parameter_shift_gradient,
    purity_change_bound,
    qfim,
    qfim_quadratic_form,
    step_bound_from_quadratic,
    trace_distance_step_bound,
)
from shadowguard.optimizer.scan import ScanTable, entropy_growth, gradient_variance_scan
from shadowguard.optimizer.vqe import (
    InitializationError,
    OptimizerConfig,
    Problem,
    RunRecord,
    run_layerwise,
    run_wbp_free,
)

__all__ = [
    "InitializationError",
    "OptimizerConfig",
    "Problem",
    "RunRecord",
    "ScanTable",
    "ShadowEnergyEvaluator",
    "WbpConfig",
    "energy_and_gradient",
    "entropy_growth",
    "exact_energy",
    "gd_step",
    "gradient_variance_scan",
    "haar_average_purity",
    "page_entropy_asymptotic",
    "page_entropy_exact",
    "parameter_shift_gradient",
    "purity_change_bound",
    "qfim",
    "qfim_quadratic_form",
    "run_layerwise",
    "run_wbp_free",
    "step_bound_from_quadratic",
    "trace_distance_step_bound",
    "wbp_check",
]
