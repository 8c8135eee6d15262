"""Higher-order tensor pooling with spectral power normalization."""

from .analysis import (
    BoundReport,
    OdeState,
    alpha_of_eta,
    bound_gaps,
    detector_curve,
    eta_of_t,
    eta_of_t_exact,
    gamma_of_t,
    ode_residual_gamma,
    ode_residual_maxexp,
    pushforward_spectrum,
    t_of_eta,
    t_of_gamma,
    verify_combined_bound,
    verify_gamma_bound,
    verify_gamma_ode,
    verify_maxexp_bound,
    verify_maxexp_ode,
    y_of_eta,
)
from .errors import DegenerateSpectrumError, DomainError, InputError
from .gradients import (
    MatrixGradient,
    core_coefficient_grad,
    eig_value_grad,
    eig_vector_grad,
    epn_matrix_vjp,
    finite_diff_oracle,
    unfolded_factor_vjp,
)
from .hosvd import (
    HosvdFactors,
    apply_epn_core,
    core_coefficient,
    detector_likelihood,
    hosvd_supersym,
    kappa_for_order,
    reconstruct,
    tpe_distance,
    tpe_dot,
    tpe_dot_factored,
)
from .sketch import SketchPlan, make_plan
from .spectral import (
    EigenDecomposition,
    PnSpec,
    epn_matrix,
    grassmann_map,
    heat_kernel,
    normalize_spectrum,
    pn_scalar,
    precision_laplacian,
    sym_eig,
)
from .tensor import (
    DenseTensor,
    FeatureSet,
    check_supersymmetric,
    frobenius_norm,
    inner,
    mode_product,
    outer_power,
    pool,
    refold,
    unfold,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "DegenerateSpectrumError",
    "DenseTensor",
    "DomainError",
    "EigenDecomposition",
    "FeatureSet",
    "HosvdFactors",
    "InputError",
    "MatrixGradient",
    "OdeState",
    "PnSpec",
    "SketchPlan",
    "alpha_of_eta",
    "apply_epn_core",
    "bound_gaps",
    "check_supersymmetric",
    "core_coefficient",
    "core_coefficient_grad",
    "detector_curve",
    "detector_likelihood",
    "eig_value_grad",
    "eig_vector_grad",
    "epn_matrix",
    "epn_matrix_vjp",
    "eta_of_t",
    "eta_of_t_exact",
    "finite_diff_oracle",
    "frobenius_norm",
    "gamma_of_t",
    "grassmann_map",
    "heat_kernel",
    "hosvd_supersym",
    "inner",
    "kappa_for_order",
    "make_plan",
    "mode_product",
    "normalize_spectrum",
    "ode_residual_gamma",
    "ode_residual_maxexp",
    "outer_power",
    "pn_scalar",
    "pool",
    "precision_laplacian",
    "pushforward_spectrum",
    "reconstruct",
    "refold",
    "sym_eig",
    "t_of_eta",
    "t_of_gamma",
    "tpe_distance",
    "tpe_dot",
    "tpe_dot_factored",
    "unfold",
    "unfolded_factor_vjp",
    "verify_combined_bound",
    "verify_gamma_bound",
    "verify_gamma_ode",
    "verify_maxexp_bound",
    "verify_maxexp_ode",
    "y_of_eta",
]
