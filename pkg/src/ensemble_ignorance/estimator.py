"""scikit-learn compatible wrapper around the ensemble scores.

``X`` is an (n_samples, m) member matrix, one ensemble per row, and ``y``
holds the matching observations. ``transform`` yields the fitted Normal
parameters per row; ``score_samples`` the per-row Ignorance.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from .exceptions import EnsembleSizeError, ValidationError
from .scores import (
    MIN_SIZE_CORRECTED,
    MIN_SIZE_STANDARD,
    Estimator,
    ensemble_moments,
    mean_score,
    score_ensembles,
)
from .validation import check_positive_variance


class EnsembleIgnorance(TransformerMixin, BaseEstimator):
    """Score ensemble forecasts with the standard, corrected or extrapolated Ignorance.

    Parameters
    ----------
    estimator : {"standard", "corrected", "extrapolated"}
    target_size : int, optional
        Hypothetical ensemble size for ``estimator="extrapolated"``.
    skip_degenerate : bool
        Return NaN for zero-spread rows instead of raising.
    """

    def __init__(self, estimator="corrected", target_size=None, skip_degenerate=False):
        self.estimator = estimator
        self.target_size = target_size
        self.skip_degenerate = skip_degenerate

    def _min_size(self):
        est = Estimator(self.estimator)
        if est is Estimator.STANDARD:
            return MIN_SIZE_STANDARD
        if est in (Estimator.BIAS_CORRECTED, Estimator.EXTRAPOLATED):
            return MIN_SIZE_CORRECTED
        raise ValidationError(f"estimator {self.estimator!r} does not score ensembles")

    def _check_X(self, X):
        X = check_array(X, dtype=np.float64)
        if X.shape[1] < self._min_size():
            raise EnsembleSizeError(X.shape[1], self._min_size(), self.estimator)
        fitted = getattr(self, "n_members_", None)
        if fitted is not None and X.shape[1] != fitted:
            raise ValidationError(f"X has {X.shape[1]} members, but the estimator was fitted with {fitted}")
        return X

    def fit(self, X, y=None):
        X = self._check_X(X)
        if Estimator(self.estimator) is Estimator.EXTRAPOLATED and self.target_size is None:
            raise ValidationError("target_size is required for the extrapolated estimator")
        self.n_members_ = X.shape[1]
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        """Return an (n_samples, 2) array of ensemble means and variances."""
        check_is_fitted(self, "n_members_")
        X = self._check_X(X)
        mean, var = ensemble_moments(X)
        if not self.skip_degenerate:
            check_positive_variance(var)
        return np.column_stack([mean, var])

    def score_samples(self, X, y):
        check_is_fitted(self, "n_members_")
        X = self._check_X(X)
        y = column_or_1d(y)
        return score_ensembles(
            X, y, self.estimator, target_size=self.target_size,
            skip_degenerate=self.skip_degenerate,
        )

    def score(self, X, y):
        """Negative mean Ignorance, so that larger is better as scikit-learn expects."""
        values = self.score_samples(X, y)
        return -mean_score(values[np.isfinite(values)])
