"""Adaptive convolutions on regular grids.

Spatially varying smoothing kernels steered by matrix-valued adaptation
fields computed from phase-space transforms, plus variable-bandwidth kernel
density estimation.
"""
from .grid import (
    Grid,
    MatrixField,
    ScalarField,
    SpdMatrix,
    VectorField,
    gaussian_field,
    gradient,
    hessian,
    integrate,
    lp_norm,
    make_grid,
    spd_sqrt,
)
from .transforms import (
    PhaseSpaceField,
    Spectrum,
    adaptive_windowed_fourier,
    conjugate_grid,
    fourier,
    husimi_check,
    inverse_fourier,
    wigner,
    windowed_fourier,
)
from .mu import (
    FixedPointReport,
    MuField,
    constant_mu_field,
    local_variation_matrix,
    mu_adaptive_fixed_point,
    mu_global_fourier,
    mu_gradient_baseline,
    mu_windowed,
    mu_wigner,
    pd_repair,
)
from .conv import (
    ContinuityInput,
    KernelField,
    adaptive_conv,
    adaptive_conv_derivative,
    continuity_current,
    continuity_residual,
    generalized_conv,
    type_three_conv,
    type_two_conv,
)
from .verify import CheckResult, check_names, run_checks
from .vkde import (
    BandwidthVector,
    DensityEstimate,
    SampleSet,
    calibrate_kappa,
    kde_fixed,
    silverman_bandwidth,
    vkde_fixed_point,
    vkde_sample_point,
)

__version__ = "0.1.0"
