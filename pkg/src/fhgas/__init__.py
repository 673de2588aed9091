"""Discrete log-gas on the roots of unity, Toeplitz determinants with
Fisher-Hartwig singularities, and their Fredholm-determinant correction."""
from .asymptotics import FHPrediction, fh_prediction, fh_ratio, log_barnes_g, szego_prediction
from .fredholm import ContourQuadrature, FredholmResult, ab_matrix, build_contour, fredholm_det
from .gmc import FieldSample, covariance_exact, gmc_density, sample_field
from .opuc import OPUCBasis, build_basis, cd_kernel, eval_phi, eval_phi_bar
from .sampler import (
    GasSample,
    RngStream,
    brute_force_pmf,
    empirical_measure_integral,
    linear_statistic,
    log_char_poly_beta,
    log_truncated_field,
    sample_gas,
)
from .symbol import (
    DomainError,
    FHSymbol,
    RaySide,
    eval_continued,
    eval_De,
    eval_Di,
    eval_on_circle,
    eval_v,
    make_symbol,
)
from .toeplitz import (
    LogDet,
    MomentTable,
    continuum_moments,
    discrete_moments,
    expectation_product,
    toeplitz_logdet,
)

__version__ = "0.1.0"
