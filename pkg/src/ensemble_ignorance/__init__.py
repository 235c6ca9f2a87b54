"""Ignorance-score verification of ensemble forecasts under a Normal approximation."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    DegenerateEnsembleError,
    DomainError,
    EnsembleSizeError,
    IngestionError,
    OutOfSupportError,
    ValidationError,
)
from .scores import (  # noqa: E402
    BiasVarianceReport,
    Estimator,
    GaussianParams,
    ScoreReport,
    ScoreValue,
    expected_standard_bias,
    fit_gaussian,
    ignorance_bias_corrected,
    ignorance_extrapolated,
    ignorance_population,
    ignorance_standard,
    score_ensembles,
    score_variances,
)
from .special import digamma, log_gamma  # noqa: E402

__all__ = [
    "BiasVarianceReport",
    "DegenerateEnsembleError",
    "DomainError",
    "EnsembleSizeError",
    "Estimator",
    "GaussianParams",
    "IngestionError",
    "OutOfSupportError",
    "ScoreReport",
    "ScoreValue",
    "ValidationError",
    "digamma",
    "expected_standard_bias",
    "fit_gaussian",
    "ignorance_bias_corrected",
    "ignorance_extrapolated",
    "ignorance_population",
    "ignorance_standard",
    "log_gamma",
    "score_ensembles",
    "score_variances",
]
