"""Input validation helpers shared by the functional and estimator APIs."""
import math
import numbers

import numpy as np

from .exceptions import DegenerateEnsembleError, EnsembleSizeError, ValidationError

UNITS = {"nats": 1.0, "bits": math.log(2.0), "bans": math.log(10.0)}


def check_finite_scalar(value, name):
    if isinstance(value, bool) or not isinstance(value, (numbers.Real, np.floating, np.integer)):
        raise ValidationError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return value


def check_size(m, name="ensemble size", minimum=1):
    if isinstance(m, bool) or not isinstance(m, (numbers.Integral, np.integer)):
        raise ValidationError(f"{name} must be an integer, got {m!r}")
    m = int(m)
    if m < minimum:
        raise EnsembleSizeError(m, minimum)
    return m


def check_members(members, min_size=2, estimator=None):
    """Return ``members`` as a finite 1-d float array with at least ``min_size`` entries."""
    arr = np.asarray(members, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"ensemble members must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_size:
        raise EnsembleSizeError(arr.size, min_size, estimator)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("ensemble members must all be finite")
    return arr


def check_member_matrix(members, min_size=2, estimator=None):
    """2-d (rows = forecast instances, columns = members) version of `check_members`."""
    arr = np.asarray(members, dtype=float)
    if arr.ndim != 2:
        raise ValidationError(f"member matrix must be two-dimensional, got shape {arr.shape}")
    if arr.shape[1] < min_size:
        raise EnsembleSizeError(arr.shape[1], min_size, estimator)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("member matrix contains non-finite values")
    return arr


def check_observations(obs, n=None):
    arr = np.asarray(obs, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"observations must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValidationError(f"expected {n} observations, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("observations must all be finite")
    return arr


def check_positive_variance(variance):
    variance = np.asarray(variance, dtype=float)
    bad = ~(variance > 0.0)
    if np.any(bad):
        rows = np.flatnonzero(np.atleast_1d(bad))
        raise DegenerateEnsembleError(
            f"degenerate ensemble (zero spread) at row(s) {rows.tolist()[:10]}",
            rows=rows.tolist(),
        )
    return variance


def check_units(units):
    if units not in UNITS:
        raise ValidationError(f"units must be one of {sorted(UNITS)}, got {units!r}")
    return units
