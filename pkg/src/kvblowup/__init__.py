"""Pseudo-spectral solver and exact blow-up certificate for a nonlocal Kuramoto-Velarde model."""

__version__ = "0.1.0"

from .spectral import (  # noqa: E402
    GridSpec,
    SpectralField,
    build_grid,
    dissipation_symbol,
    fractional_derivative,
    pointwise_product,
    semigroup_factor,
    sobolev_norm,
    sobolev_norm_sq,
    to_physical,
    to_spectral,
)
from .solver import (  # noqa: E402
    ModelParams,
    SimConfig,
    TrajectoryReport,
    XsNormSpec,
    initial_datum,
    picard_iterate,
    run_simulation,
    step_etd,
    xs_norm_diagnostic,
)
from .piecewise import PiecewisePolynomial  # noqa: E402
from .cascade import (  # noqa: E402
    CascadeLevel,
    CertificateConstants,
    cascade_sequence,
    constants,
    g0,
    induction_step_check,
    log2_f,
    self_convolve,
    series_partial_sums,
)
