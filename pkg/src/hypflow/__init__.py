"""Mild solutions of incompressible Navier-Stokes on the hyperbolic plane.

The package builds small-data mild solutions by Picard iteration of the
Duhamel integral equation and verifies the decay estimates the
construction rests on: heat-kernel facts, the vector heat semigroup on
divergence-free one-forms, the Leray projection, the decay-constant
algebra, and a harness that turns each estimate into a falsifiable
numerical check.

Layered modules, lowest first:

``geometry``            truncated polar grid, fields, norms
``heat_kernel``         scalar heat kernels and e^{t Delta}
``one_form_semigroup``  vector semigroup e^{tL} on divergence-free forms
``leray_projection``    Hodge pieces and the projection onto div-free forms
``constants``           admissible-exponent arithmetic for every rate
``mild_solver``         Duhamel quadrature and the Picard loop
``estimates_harness``   estimate checks producing pass/fail reports
``cli``                 batch front-end with deterministic CSV/JSON output
"""

from .constants import (
    AdmissibilityError,
    DecayConstants,
    beta_function,
    singular_time_integral,
)
from .estimates_harness import (
    ESTIMATE_IDS,
    EstimateReport,
    classify_space_time,
    fit_exponential_rate,
    fit_power_slope,
    gest_model_check,
    linear_trajectory,
    measure_decay,
    small_time_blowup,
    small_time_weighted_values,
    tmdcy2_branch,
    verify_G_bound,
    verify_dispersive,
    verify_div_smoothing,
    verify_smoothing,
    verify_space_time_membership,
    verify_tmdcy2,
)
from .geometry import (
    OneForm,
    PolarGrid,
    ScalarField,
    SupportError,
    check_support,
    geodesic_distance,
    lp_norm,
    sharp_flat,
    volume_density,
)
from .heat_kernel import (
    KERNEL_MIN_TIME,
    KernelTable,
    QuadratureError,
    apply_scalar_semigroup,
    apply_scalar_semigroup_gradient,
    kernel_h2,
    kernel_h3,
)
from .leray_projection import (
    DIVFREE_TOLERANCE,
    codifferential,
    curl,
    exterior_derivative,
    green_inverse_laplacian,
    project,
    recover_stream,
)
from .mild_solver import (
    DivergenceDetected,
    IterationLog,
    NonConvergence,
    SolverConfig,
    Trajectory,
    calibrate_amplitude,
    constant_trajectory,
    duhamel,
    fixed_point_residual,
    make_datum,
    measure_contraction_constant,
    nonlinear_term,
    picard_solve,
)
from .one_form_semigroup import (
    TensorField,
    apply_L_semigroup_divfree,
    apply_L_semigroup_exact,
    covariant_gradient,
    stream_to_oneform,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "DecayConstants",
    "beta_function",
    "singular_time_integral",
    "ESTIMATE_IDS",
    "EstimateReport",
    "classify_space_time",
    "fit_exponential_rate",
    "fit_power_slope",
    "gest_model_check",
    "linear_trajectory",
    "measure_decay",
    "small_time_blowup",
    "small_time_weighted_values",
    "tmdcy2_branch",
    "verify_G_bound",
    "verify_dispersive",
    "verify_div_smoothing",
    "verify_smoothing",
    "verify_space_time_membership",
    "verify_tmdcy2",
    "OneForm",
    "PolarGrid",
    "ScalarField",
    "SupportError",
    "check_support",
    "geodesic_distance",
    "lp_norm",
    "sharp_flat",
    "volume_density",
    "KERNEL_MIN_TIME",
    "KernelTable",
    "QuadratureError",
    "apply_scalar_semigroup",
    "apply_scalar_semigroup_gradient",
    "kernel_h2",
    "kernel_h3",
    "DIVFREE_TOLERANCE",
    "codifferential",
    "curl",
    "exterior_derivative",
    "green_inverse_laplacian",
    "project",
    "recover_stream",
    "DivergenceDetected",
    "IterationLog",
    "NonConvergence",
    "SolverConfig",
    "Trajectory",
    "calibrate_amplitude",
    "constant_trajectory",
    "duhamel",
    "fixed_point_residual",
    "make_datum",
    "measure_contraction_constant",
    "nonlinear_term",
    "picard_solve",
    "TensorField",
    "apply_L_semigroup_divfree",
    "apply_L_semigroup_exact",
    "covariant_gradient",
    "stream_to_oneform",
    "__version__",
]
