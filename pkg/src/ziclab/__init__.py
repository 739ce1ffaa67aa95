"""Numerical lab for Gaussian-optimality questions on the scalar
Z-interference channel."""

from .gaussmix import (
    DerivTerm,
    GaussDerivMixture,
    GaussMixture,
    convolve,
    gauss_deriv_pdf,
    gauss_deriv_poly,
    gauss_location_mixture,
    gaussian,
    hermite_weighted_norm,
)
from .entropy import (
    EntropyExpansion,
    FitRejectedError,
    GridDensity,
    NegativeDensityError,
    NonNormalizedError,
    TailSide,
    convolve_grids,
    differential_entropy,
    fisher_information,
    gaussian_entropy,
    grid_from_mixture,
    mixture_entropy,
    mixture_to_grid,
    smoothing_curve,
    smoothing_expansion,
)
from .counterexamples import (
    ChannelParams,
    NoGaussianMaxError,
    PowerViolationError,
    RecipeRejectedError,
    SkewRecipe,
    VerticalPerturbation,
    default_recipe,
    deriv_norm_balance,
    entropy_fisher_functional,
    fisher_limit_gain,
    interference_objective,
    select_epsilon,
    skewness_gap,
    stability_root,
    vertical_gap,
)
from .hessian import (
    HermiteCoeffVector,
    HessianReport,
    LocalOptimalityCertificate,
    NotStationaryError,
    hessian_quadratic_form,
    local_optimality_radius,
    phase_diagram,
    stability_classify,
    stability_threshold,
)
from .hkregion import (
    GridTooSmallError,
    HKParams,
    NotApplicableError,
    PsdMatrix,
    WitnessUnavailableError,
    capped_gauss_objective,
    constant_power_gap,
    decreasing_alignment,
    eigenvalue_bound_audit,
    fixed_power_value,
    gauss_objective,
    increasing_alignment,
    maximizer_bound_check,
    power_control_map,
    power_control_value,
    power_control_value_2d,
)
from .geometry import (
    ConvexBody2D,
    NonConvexInputError,
    RoundedBody,
    disc,
    mean_width_2d,
    minkowski_sum,
    mixed_area,
    polygon,
    square,
    volume_ratio,
)

__version__ = "0.1.0"
