"""Verification series and the resampling protocol applied to them.

A series is ``n`` time steps, each with a scalar observation and ``m``
exchangeable ensemble members. All transforms return new series.

CSV layout (UTF-8)::

    # units: K            <- optional comment line
    time,obs,member_1,...,member_m
    1981,0.25,0.31,...
"""
import csv
import io
import math
import os
from dataclasses import dataclass

import numpy as np

from .distributions import RngStream, stable_hash
from .exceptions import IngestionError, ValidationError
from .validation import check_finite_scalar, check_size

_SUBSAMPLE_KEY = stable_hash("subsample")
_CLIMATOLOGY_KEY = stable_hash("climatology")
_SYNTH_KEY = stable_hash("synthesize")


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class VerificationSeries:
    times: tuple
    observations: np.ndarray
    members: np.ndarray
    units: str = ""

    def __post_init__(self):
        obs = _frozen(self.observations)
        members = _frozen(self.members)
        times = tuple(str(t) for t in self.times)
        if obs.ndim != 1 or obs.size < 2:
            raise ValidationError("a series needs at least 2 observations")
        if members.ndim != 2 or members.shape[0] != obs.size:
            raise ValidationError(
                f"member matrix shape {members.shape} does not match {obs.size} observations"
            )
        if members.shape[1] < 1:
            raise ValidationError("a series needs at least one member per row")
        if len(times) != obs.size:
            raise ValidationError(f"{len(times)} time labels for {obs.size} observations")
        if not (np.all(np.isfinite(obs)) and np.all(np.isfinite(members))):
            raise ValidationError("series values must be finite")
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "times", times)

    @property
    def n(self):
        return self.observations.size

    @property
    def m(self):
        return self.members.shape[1]

    def replace(self, observations=None, members=None):
        return VerificationSeries(
            self.times,
            self.observations if observations is None else observations,
            self.members if members is None else members,
            self.units,
        )


@dataclass(frozen=True)
class SubsampleSpec:
    """How to draw sub-ensembles: ``size`` members per row, ``replicates`` times.

    ``per_row=True`` draws a fresh member subset at every time step;
    ``False`` reuses one column subset for the whole series.
    """

    size: int
    replicates: int = 1000
    seed: int = 0
    per_row: bool = True

    def __post_init__(self):
        check_size(self.size, "subensemble size", 1)
        check_size(self.replicates, "replicates", 1)


# --- I/O ------------------------------------------------------------------

def _parse_float(cell, row, column):
    text = cell.strip()
    if not text:
        raise IngestionError("missing value", row, column)
    try:
        value = float(text)
    except ValueError:
        raise IngestionError(f"non-numeric value {cell!r}", row, column) from None
    if not math.isfinite(value):
        raise IngestionError(f"non-finite value {cell!r}", row, column)
    return value


def load_series(source):
    """Read a series from a path or an open text stream."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_series(fh)

    units = ""
    reader = csv.reader(source)
    header = None
    lineno = 0
    times, obs, rows = [], [], []
    for record in reader:
        lineno = reader.line_num
        if not record or (len(record) == 1 and not record[0].strip()):
            continue
        if header is None:
            if record[0].lstrip().startswith("#"):
                comment = ",".join(record).lstrip("# ").strip()
                if comment.lower().startswith("units:"):
                    units = comment.split(":", 1)[1].strip()
                continue
            header = [h.strip() for h in record]
            if len(header) < 2 or header[0] != "time":
                raise IngestionError("header must start with 'time'", lineno, header[0] if header else None)
            if header[1] != "obs":
                raise IngestionError("missing observation column 'obs'", lineno, header[1])
            if len(header) < 4:
                raise IngestionError("at least two member columns are required", lineno)
            continue
        if len(record) != len(header):
            raise IngestionError(
                f"ragged row: {len(record)} fields, header has {len(header)}", lineno
            )
        times.append(record[0].strip())
        obs.append(_parse_float(record[1], lineno, header[1]))
        rows.append([_parse_float(c, lineno, h) for c, h in zip(record[2:], header[2:])])
    if header is None:
        raise IngestionError("empty input: no header found")
    if len(obs) < 2:
        raise IngestionError(f"need at least 2 data rows, found {len(obs)}")
    return VerificationSeries(times, np.array(obs), np.array(rows), units)


def _fmt(value):
    return format(float(value), ".17g")


def write_series(series, dest):
    """Write ``series`` as CSV with 17 significant digits (lossless)."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            return write_series(series, fh)
    if series.units:
        dest.write(f"# units: {series.units}\n")
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(["time", "obs"] + [f"member_{i + 1}" for i in range(series.m)])
    for t, x, row in zip(series.times, series.observations, series.members):
        writer.writerow([t, _fmt(x)] + [_fmt(v) for v in row])


def series_to_csv(series):
    buf = io.StringIO()
    write_series(series, buf)
    return buf.getvalue()


# --- transforms -----------------------------------------------------------

def to_anomalies(series):
    """Remove the observation grand mean and the pooled member grand mean."""
    obs = series.observations - series.observations.mean()
    members = series.members - series.members.mean()
    return series.replace(obs, members)


def climatological_sd(series):
    return float(np.std(series.observations, ddof=1))


def inject_bias(series, bias_in_climatological_sd):
    """Shift every member by ``bias`` observation standard deviations."""
    b = check_finite_scalar(bias_in_climatological_sd, "bias")
    sd = climatological_sd(series)
    if sd == 0.0:
        raise ValidationError("observations have zero variance; climatological SD undefined")
    return series.replace(members=series.members + b * sd)


def draw_subsets(rng, n_rows, pool, size, replicates=1, per_row=True):
    """Indices of ``size`` distinct items out of ``pool``, uniform without replacement.

    Returns an int array of shape (replicates, n_rows, size).
    """
    if size > pool:
        raise ValidationError(f"cannot draw {size} members from {pool}")
    keys = rng.random((replicates, n_rows if per_row else 1, pool))
    if size == pool:
        idx = np.argsort(keys, axis=-1)
    else:
        idx = np.argpartition(keys, size - 1, axis=-1)[..., :size]
    if not per_row:
        idx = np.broadcast_to(idx, (replicates, n_rows, size))
    return idx


def subsample_members(series, spec, replicate):
    """Replicate ``replicate`` of drawing ``spec.size`` members per row without replacement."""
    if spec.size > series.m:
        raise ValidationError(f"subensemble size {spec.size} exceeds ensemble size {series.m}")
    rng = RngStream(spec.seed, replicate, (_SUBSAMPLE_KEY,)).generator()
    idx = draw_subsets(rng, series.n, series.m, spec.size, 1, spec.per_row)[0]
    return series.replace(members=np.take_along_axis(series.members, idx, axis=1))


def leave_one_out_pool(observations):
    """(n, n-1) matrix whose row t holds every observation except the one at t."""
    obs = np.asarray(observations, dtype=float)
    n = obs.size
    mask = ~np.eye(n, dtype=bool)
    return np.broadcast_to(obs, (n, n))[mask].reshape(n, n - 1)


def climatology_series(series):
    """Series whose members at time t are all other observations."""
    return series.replace(members=leave_one_out_pool(series.observations))


def climatological_ensemble(series, size, replicate, seed):
    """Climatological ensemble of ``size`` past observations, never including x_t."""
    size = check_size(size, "climatological ensemble size", 1)
    if size > series.n - 1:
        raise ValidationError(
            f"climatological ensemble size {size} exceeds the leave-one-out maximum n - 1 = {series.n - 1}"
        )
    pool = leave_one_out_pool(series.observations)
    rng = RngStream(seed, replicate, (_CLIMATOLOGY_KEY,)).generator()
    idx = draw_subsets(rng, series.n, series.n - 1, size)[0]
    return series.replace(members=np.take_along_axis(pool, idx, axis=1))


def signal_variance_for_correlation(rho, m):
    """Signal variance S (unit-variance observations) so that corr(ensemble mean, obs) = rho.

    Observation noise and member noise both have variance 1 - S, which makes
    members and observation exchangeable given the signal.
    """
    r2 = rho * rho
    a = r2 * (1.0 - 1.0 / m)
    return 0.5 * (a + math.sqrt(a * a + 4.0 * r2 / m))


def synthesize_series(n, m, rho, bias=0.0, trend=0.0, seed=0, units=""):
    """Synthetic forecast/observation series with a target skill and bias.

    With latent signal s_t ~ N(0, S)::

        x_t     = s_t + e_t + trend * (t - tbar)
        y_{t,i} = sign(rho) s_t + bias + eta_{t,i} + trend * (t - tbar)

    where e_t, eta_{t,i} ~ N(0, 1 - S) and S is chosen by
    `signal_variance_for_correlation`. Observations have unit climatological
    variance (before trend) and members are statistically consistent with
    them up to ``bias``.
    """
    n = check_size(n, "n", 4)
    m = check_size(m, "m", 2)
    rho = check_finite_scalar(rho, "rho")
    if not abs(rho) < 1.0:
        raise ValidationError(f"correlation must satisfy |rho| < 1, got {rho!r}")
    bias = check_finite_scalar(bias, "bias")
    trend = check_finite_scalar(trend, "trend")

    rng = RngStream(seed, 0, (_SYNTH_KEY,)).generator()
    S = signal_variance_for_correlation(rho, m)
    noise_sd = math.sqrt(1.0 - S)
    signal = math.sqrt(S) * rng.standard_normal(n)
    obs_noise = noise_sd * rng.standard_normal(n)
    member_noise = noise_sd * rng.standard_normal((n, m))
    t = np.arange(n, dtype=float)
    drift = trend * (t - t.mean())
    obs = signal + obs_noise + drift
    members = (math.copysign(1.0, rho) * signal + bias + drift)[:, None] + member_noise
    times = [str(i + 1) for i in range(n)]
    return VerificationSeries(times, obs, members, units)
