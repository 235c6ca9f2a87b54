"""Ignorance-score estimators for Normal approximations of ensemble forecasts.

All values are in nats. Vectorised kernels (``*_from_moments``) operate on
numpy arrays of ensemble means/variances and are shared by the scalar API,
batch scoring and the Monte Carlo experiments.
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .exceptions import EnsembleSizeError, ValidationError
from .special import digamma
from .validation import (
    UNITS,
    check_finite_scalar,
    check_member_matrix,
    check_members,
    check_observations,
    check_positive_variance,
    check_size,
    check_units,
)

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

MIN_SIZE_STANDARD = 2
MIN_SIZE_CORRECTED = 4


class Estimator(str, Enum):
    POPULATION = "population"
    STANDARD = "standard"
    BIAS_CORRECTED = "corrected"
    EXTRAPOLATED = "extrapolated"
    NORMAL_APPROX_ORACLE = "normal_oracle"
    TRUE_DENSITY_ORACLE = "true_density"


@dataclass(frozen=True)
class GaussianParams:
    mean: float
    variance: float

    def __post_init__(self):
        object.__setattr__(self, "mean", check_finite_scalar(self.mean, "mean"))
        variance = check_finite_scalar(self.variance, "variance")
        if variance <= 0.0:
            raise ValidationError(f"variance must be positive, got {variance!r}")
        object.__setattr__(self, "variance", variance)

    @property
    def sd(self):
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class ScoreValue:
    value: float
    estimator: Estimator
    ensemble_size: Optional[int] = None
    target_size: Optional[int] = None

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValidationError(f"score value must be finite, got {self.value!r}")
        minimum = {
            Estimator.STANDARD: MIN_SIZE_STANDARD,
            Estimator.BIAS_CORRECTED: MIN_SIZE_CORRECTED,
            Estimator.EXTRAPOLATED: MIN_SIZE_CORRECTED,
        }.get(self.estimator)
        if minimum is not None and (self.ensemble_size is None or self.ensemble_size < minimum):
            raise EnsembleSizeError(self.ensemble_size, minimum, self.estimator.value)
        if self.target_size is not None and self.target_size < MIN_SIZE_CORRECTED:
            raise EnsembleSizeError(self.target_size, MIN_SIZE_CORRECTED, "target")

    def in_units(self, units):
        return convert_units(self.value, units)

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class BiasVarianceReport:
    """First-order conditional variances of the standard and corrected scores."""

    z_hat: float
    var_standard: float
    var_corrected: float
    bias: Optional[float] = None

    @property
    def variance_reduction(self):
        return self.var_standard - self.var_corrected


@dataclass
class ScoreReport:
    """Per-pair scores of a verification series plus their arithmetic mean."""

    estimator: Estimator
    scores: np.ndarray
    times: tuple = ()
    skipped: tuple = ()
    ensemble_size: Optional[int] = None
    target_size: Optional[int] = None
    units: str = "nats"
    mean: float = field(init=False)
    se: float = field(init=False)

    def __post_init__(self):
        valid = self.scores[np.isfinite(self.scores)]
        if valid.size == 0:
            raise ValidationError("no scorable pairs in the series")
        self.mean = mean_score(valid)
        self.se = float(np.std(valid, ddof=1) / math.sqrt(valid.size)) if valid.size > 1 else math.nan

    def in_units(self, units):
        check_units(units)
        factor = UNITS[self.units] / UNITS[units]
        return ScoreReport(
            self.estimator,
            self.scores * factor,
            times=self.times,
            skipped=self.skipped,
            ensemble_size=self.ensemble_size,
            target_size=self.target_size,
            units=units,
        )


def convert_units(value, units):
    """Convert a value in nats to ``units`` (nats, bits or bans)."""
    return value / UNITS[check_units(units)]


def mean_score(values):
    """Order-independent arithmetic mean (exactly rounded summation)."""
    values = np.asarray(values, dtype=float).ravel()
    return math.fsum(values.tolist()) / values.size


def _log_ratio_correction(m):
    # psi((m-1)/2) - ln((m-1)/2): the bias of ln(ensemble variance)
    half = 0.5 * (m - 1)
    return digamma(half) - math.log(half)


# --- vectorised kernels ---------------------------------------------------

def ensemble_moments(members):
    """Row-wise ensemble mean and unbiased (divisor m-1) variance.

    Rows whose members are all identical get variance exactly 0.
    """
    members = np.asarray(members, dtype=float)
    mean = members.mean(axis=-1)
    var = members.var(axis=-1, ddof=1)
    flat = members.max(axis=-1) == members.min(axis=-1)
    return mean, np.where(flat, 0.0, var)


def population_from_moments(mean, variance, x):
    return HALF_LOG_2PI + 0.5 * np.log(variance) + 0.5 * (x - mean) ** 2 / variance


def standard_from_moments(mean, variance, x):
    return population_from_moments(mean, variance, x)


def corrected_from_moments(mean, variance, x, m):
    shrink = (m - 3.0) / (m - 1.0)
    offset = 0.5 * (_log_ratio_correction(m) + 1.0 / m)
    return (
        HALF_LOG_2PI
        + 0.5 * np.log(variance)
        + 0.5 * shrink * (mean - x) ** 2 / variance
        - offset
    )


def extrapolated_from_moments(mean, variance, x, m, target):
    M = target
    factor = ((M - 1.0) / (M - 3.0)) * ((m - 3.0) / (m - 1.0))
    offset = 0.5 * (
        digamma(0.5 * (M - 1))
        - digamma(0.5 * (m - 1))
        + math.log((m - 1.0) / (M - 1.0))
        + (m - M) * (M - 1.0) / (M * m * (M - 3.0))
    )
    return HALF_LOG_2PI + 0.5 * np.log(variance) + 0.5 * factor * (mean - x) ** 2 / variance + offset


def normal_oracle(x):
    """Ignorance of the standard Normal, the best Normal fit to any zero-mean unit-variance law."""
    return HALF_LOG_2PI + 0.5 * np.asarray(x, dtype=float) ** 2


# --- scalar API -----------------------------------------------------------

def ignorance_population(params, x):
    """Ignorance of the known Normal forecast ``params`` at observation ``x``."""
    x = check_finite_scalar(x, "x")
    value = float(population_from_moments(params.mean, params.variance, x))
    return ScoreValue(value, Estimator.POPULATION)


def fit_gaussian(members):
    """Fit a Normal to the ensemble by its mean and unbiased variance."""
    arr = check_members(members, MIN_SIZE_STANDARD)
    mean, var = ensemble_moments(arr)
    check_positive_variance(var)
    return GaussianParams(float(mean), float(var))


def ignorance_standard(members, x):
    """Ignorance of the Normal fitted to ``members`` (biased for finite ensembles)."""
    arr = check_members(members, MIN_SIZE_STANDARD, Estimator.STANDARD.value)
    params = fit_gaussian(arr)
    value = ignorance_population(params, x).value
    return ScoreValue(value, Estimator.STANDARD, ensemble_size=arr.size)


def ignorance_bias_corrected(members, x):
    """Ensemble-size-unbiased estimate of the population Ignorance; needs m >= 4."""
    arr = check_members(members, MIN_SIZE_CORRECTED, Estimator.BIAS_CORRECTED.value)
    x = check_finite_scalar(x, "x")
    params = fit_gaussian(arr)
    value = float(corrected_from_moments(params.mean, params.variance, x, arr.size))
    return ScoreValue(value, Estimator.BIAS_CORRECTED, ensemble_size=arr.size)


def ignorance_extrapolated(members, x, target_size):
    """Estimate, from m members, the expected standard score of a ``target_size``-member ensemble."""
    arr = check_members(members, MIN_SIZE_CORRECTED, Estimator.EXTRAPOLATED.value)
    target = check_size(target_size, "target size", MIN_SIZE_CORRECTED)
    x = check_finite_scalar(x, "x")
    params = fit_gaussian(arr)
    value = float(extrapolated_from_moments(params.mean, params.variance, x, arr.size, target))
    return ScoreValue(value, Estimator.EXTRAPOLATED, ensemble_size=arr.size, target_size=target)


def standard_bias(m, normalized_sq_error):
    """Expected excess of the standard score over the population score.

    ``normalized_sq_error`` is (x - mu)^2 / sigma^2, or its expectation when
    the observation is itself random.
    """
    m = check_size(m, "ensemble size", MIN_SIZE_CORRECTED)
    return (
        0.5 * _log_ratio_correction(m)
        + normalized_sq_error / (m - 3.0)
        + (m - 1.0) / (2.0 * m * (m - 3.0))
    )


def expected_standard_bias(params, x, m):
    x = check_finite_scalar(x, "x")
    return standard_bias(m, (x - params.mean) ** 2 / params.variance)


def score_variances(z_hat, m, params=None, x=None):
    """Propagation-of-error variances of the standard and corrected scores given x.

    ``z_hat`` is the studentized error (ensemble mean - x) / ensemble sd.
    When ``params`` and ``x`` are both supplied the report also carries the
    expected bias of the standard score.
    """
    z = check_finite_scalar(z_hat, "z_hat")
    m = check_size(m, "ensemble size", MIN_SIZE_CORRECTED)
    z2 = z * z
    shrink = (m - 3.0) / (m - 1.0)
    var_standard = z2 / m + (1.0 - z2) ** 2 / (2.0 * (m - 1.0))
    var_corrected = shrink**2 * z2 / m + (1.0 - shrink * z2) ** 2 / (2.0 * (m - 1.0))
    bias = None
    if params is not None and x is not None:
        bias = expected_standard_bias(params, x, m)
    return BiasVarianceReport(z, var_standard, var_corrected, bias)


def variance_difference(z_hat, m):
    """Closed form of var(standard) - var(corrected); nonnegative for m >= 4."""
    m = check_size(m, "ensemble size", MIN_SIZE_CORRECTED)
    z2 = float(z_hat) ** 2
    return 2.0 * z2 * z2 / (m - 1.0) ** 2 * (1.0 - 1.0 / (m - 1.0)) + 2.0 * z2 * (m - 4.0) / (
        m * (m - 1.0) ** 2
    )


# --- batch scoring --------------------------------------------------------

def score_ensembles(members, observations, estimator="corrected", target_size=None,
                    params=None, skip_degenerate=False):
    """Score every row of an (n, m) member matrix against its observation.

    Returns a float array of length n. Degenerate rows raise unless
    ``skip_degenerate`` is set, in which case they are NaN.
    """
    estimator = Estimator(estimator)
    if estimator is Estimator.POPULATION:
        if params is None:
            raise ValidationError("population estimator requires Gaussian params")
        obs = check_observations(observations)
        return np.asarray(population_from_moments(params.mean, params.variance, obs), dtype=float)

    minimum = MIN_SIZE_STANDARD if estimator is Estimator.STANDARD else MIN_SIZE_CORRECTED
    if estimator not in (Estimator.STANDARD, Estimator.BIAS_CORRECTED, Estimator.EXTRAPOLATED):
        raise ValidationError(f"estimator {estimator.value!r} cannot score ensembles")
    arr = check_member_matrix(members, minimum, estimator.value)
    obs = check_observations(observations, arr.shape[0])
    m = arr.shape[1]
    mean, var = ensemble_moments(arr)
    degenerate = var <= 0.0
    if np.any(degenerate) and not skip_degenerate:
        check_positive_variance(var)
    safe_var = np.where(degenerate, 1.0, var)
    if estimator is Estimator.STANDARD:
        out = standard_from_moments(mean, safe_var, obs)
    elif estimator is Estimator.BIAS_CORRECTED:
        out = corrected_from_moments(mean, safe_var, obs, m)
    else:
        target = check_size(target_size, "target size", MIN_SIZE_CORRECTED)
        out = extrapolated_from_moments(mean, safe_var, obs, m, target)
    return np.where(degenerate, np.nan, out)
