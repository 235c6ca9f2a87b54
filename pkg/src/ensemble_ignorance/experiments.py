"""Monte Carlo experiment drivers.

Each driver splits its grid into independent work units. A unit draws its
random numbers from streams keyed by ``(seed, hash(kind, grid point),
block)``, where blocks are fixed-size slices of the replicates. Results
therefore do not depend on how many worker threads run the units.
"""
import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from . import __version__
from .distributions import RngStream, make_family, stable_hash
from .ensemble import climatology_series, draw_subsets, series_to_csv
from .exceptions import ValidationError
from .scores import (
    HALF_LOG_2PI,
    MIN_SIZE_CORRECTED,
    corrected_from_moments,
    ensemble_moments,
    normal_oracle,
    population_from_moments,
    standard_bias,
    standard_from_moments,
)
from .validation import check_positive_variance

BLOCK_SIZE = 25_000
MIN_REPLICATES = 100
PAIRED_GAP = "standard-corrected"


class Kind(str, Enum):
    M_DEPENDENCE = "m-dependence"
    SIGMA_SWEEP = "sigma-sweep"
    SUBSAMPLE = "subsample"
    NONNORMAL = "nonnormal"


DEFAULT_THETA = {
    "t": (4.0, 6.0, 8.0, 12.0, 20.0, 40.0),
    "gamma": (5.0, 10.0, 20.0, 50.0),
    "bimodal": (0.0, 0.3, 0.6, 0.75, 0.9),
}

_DEFAULTS = {
    Kind.M_DEPENDENCE: dict(m_values=(4, 5, 6, 8, 10, 15, 20, 30, 50), replicates=100_000),
    Kind.SIGMA_SWEEP: dict(
        m_values=(5, 10, 20, 50),
        sigma_values=tuple(round(0.6 + 0.1 * i, 1) for i in range(11)),
        replicates=100_000,
    ),
    Kind.SUBSAMPLE: dict(replicates=1000),
    Kind.NONNORMAL: dict(m_values=(5, 10, 50), family="t", replicates=100_000),
}


@dataclass
class ExperimentSpec:
    kind: Kind
    m_values: tuple = ()
    sigma_values: tuple = ()
    theta_values: tuple = ()
    family: Optional[str] = None
    sizes: tuple = ()
    replicates: int = 100_000
    seed: int = 0
    output: Optional[str] = None

    @classmethod
    def default(cls, kind, **overrides):
        kind = Kind(kind)
        params = dict(_DEFAULTS[kind])
        params.update({k: v for k, v in overrides.items() if v is not None})
        spec = cls(kind=kind, **params)
        if kind is Kind.NONNORMAL and not spec.theta_values:
            spec.theta_values = DEFAULT_THETA.get(spec.family, ())
        return spec

    def __post_init__(self):
        self.kind = Kind(self.kind)
        self.m_values = tuple(int(m) for m in self.m_values)
        self.sigma_values = tuple(float(s) for s in self.sigma_values)
        self.theta_values = tuple(float(t) for t in self.theta_values)
        self.sizes = tuple(int(s) for s in self.sizes)
        self.replicates = int(self.replicates)
        self.seed = int(self.seed)

    def validate(self):
        if self.replicates < MIN_REPLICATES:
            raise ValidationError(f"replicates must be >= {MIN_REPLICATES}, got {self.replicates}")
        if self.kind is not Kind.SUBSAMPLE:
            if not self.m_values:
                raise ValidationError("ensemble size grid is empty")
            if min(self.m_values) < MIN_SIZE_CORRECTED:
                raise ValidationError(
                    f"all ensemble sizes must be >= {MIN_SIZE_CORRECTED} (minimum ensemble size "
                    f"for the corrected score), got {min(self.m_values)}"
                )
        if self.kind is Kind.SIGMA_SWEEP:
            if not self.sigma_values:
                raise ValidationError("sigma grid is empty")
            if 1.0 not in self.sigma_values:
                raise ValidationError("sigma grid must include 1.0")
            if min(self.sigma_values) <= 0:
                raise ValidationError("sigma values must be positive")
        if self.kind is Kind.NONNORMAL:
            if self.family not in DEFAULT_THETA:
                raise ValidationError(
                    f"family must be one of {sorted(DEFAULT_THETA)}, got {self.family!r}"
                )
            if not self.theta_values:
                raise ValidationError("theta grid is empty")
            for theta in self.theta_values:
                make_family(self.family, theta)
        if self.kind is Kind.SUBSAMPLE and self.sizes and min(self.sizes) < MIN_SIZE_CORRECTED:
            raise ValidationError(
                f"subensemble sizes must be >= {MIN_SIZE_CORRECTED}, got {min(self.sizes)}"
            )
        return self

    def to_dict(self):
        d = asdict(self)
        d["kind"] = self.kind.value
        d.pop("output")
        for key in ("m_values", "sigma_values", "theta_values", "sizes"):
            d[key] = list(d[key])
        return d

    def spec_hash(self):
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class ExperimentResult:
    columns: tuple
    rows: list
    metadata: dict = field(default_factory=dict)

    def column(self, name):
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def select(self, **where):
        idx = {k: self.columns.index(k) for k in where}
        return [
            dict(zip(self.columns, row))
            for row in self.rows
            if all(row[i] == where[k] for k, i in idx.items())
        ]

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()

    def sidecar(self):
        return json.dumps(self.metadata, sort_keys=True, indent=2) + "\n"

    def write(self, path):
        """Write ``path`` (CSV) and ``path`` with suffix ``.json`` (metadata)."""
        path = os.fspath(path)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(self.to_csv())
        with open(sidecar_path(path), "w", encoding="utf-8") as fh:
            fh.write(self.sidecar())


def sidecar_path(path):
    root, _ = os.path.splitext(os.fspath(path))
    return root + ".json"


def _summary(values):
    values = np.asarray(values, dtype=float)
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(values.size))
    return mean, se


def _blocks(replicates):
    start = 0
    index = 0
    while start < replicates:
        size = min(BLOCK_SIZE, replicates - start)
        yield index, size
        start += size
        index += 1


def _map(func, units, workers):
    if workers is None or workers <= 1:
        return [func(u) for u in units]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, units))


def _metadata(spec, **extra):
    meta = {
        "spec": spec.to_dict(),
        "seed": spec.seed,
        "spec_hash": spec.spec_hash(),
        "code_version": __version__,
    }
    meta.update(extra)
    return meta


def _finish(spec, columns, rows, **extra):
    result = ExperimentResult(tuple(columns), rows, _metadata(spec, columns=list(columns), **extra))
    if spec.output:
        result.write(spec.output)
    return result


def _normal_ensembles(spec, grid_key, m):
    """Yield (x, z_mean, z_var) blocks of N(0,1) observations and m-member N(0,1) ensembles."""
    key = (stable_hash(spec.kind.value, grid_key),)
    for block, size in _blocks(spec.replicates):
        rng = RngStream(spec.seed, block, key).generator()
        x = rng.standard_normal(size)
        z = rng.standard_normal((size, m))
        mean, var = ensemble_moments(z)
        check_positive_variance(var)
        yield x, mean, var


# --- ensemble size dependence ---------------------------------------------

def _m_dependence_unit(args):
    spec, m = args
    parts = {"standard": [], "corrected": [], "population": []}
    for x, mean, var in _normal_ensembles(spec, m, m):
        parts["standard"].append(standard_from_moments(mean, var, x))
        parts["corrected"].append(corrected_from_moments(mean, var, x, m))
        parts["population"].append(normal_oracle(x))
    population = HALF_LOG_2PI + 0.5
    analytic = {
        "standard": population + standard_bias(m, 1.0),
        "corrected": population,
        "population": population,
    }
    rows = []
    for name, chunks in parts.items():
        mean, se = _summary(np.concatenate(chunks))
        rows.append((m, name, mean, se, spec.replicates, analytic[name]))
    return rows


def run_m_dependence(spec, workers=1):
    """Mean scores versus ensemble size, ensembles and observations iid N(0, 1)."""
    spec.validate()
    if spec.kind is not Kind.M_DEPENDENCE:
        raise ValidationError(f"expected an {Kind.M_DEPENDENCE.value} spec, got {spec.kind.value}")
    chunks = _map(_m_dependence_unit, [(spec, m) for m in spec.m_values], workers)
    rows = [row for chunk in chunks for row in chunk]
    return _finish(spec, ("m", "estimator", "mean", "se", "replicates", "analytic"), rows)


# --- spread sweep ---------------------------------------------------------

def expected_population_score(sigma):
    """E_x of the N(0, sigma^2) Ignorance for x ~ N(0, 1)."""
    s2 = sigma * sigma
    return HALF_LOG_2PI + 0.5 * math.log(s2) + 0.5 / s2


def expected_standard_score(sigma, m):
    return expected_population_score(sigma) + standard_bias(m, 1.0 / (sigma * sigma))


def standard_optimal_sigma(m):
    """Ensemble spread minimising the expected standard score (overdispersive)."""
    return math.sqrt((m - 1.0) / (m - 3.0))


def _sigma_unit(args):
    # The ensemble for spread sigma is sigma * z, so every sigma on the grid
    # sees the same underlying draws (common random numbers).
    spec, m = args
    sigmas = spec.sigma_values
    acc = {(s, e): [] for s in sigmas for e in ("standard", "corrected", "population")}
    for x, zmean, zvar in _normal_ensembles(spec, m, m):
        for s in sigmas:
            mean, var = s * zmean, s * s * zvar
            acc[(s, "standard")].append(standard_from_moments(mean, var, x))
            acc[(s, "corrected")].append(corrected_from_moments(mean, var, x, m))
            acc[(s, "population")].append(population_from_moments(0.0, s * s, x))

    stats = {k: _summary(np.concatenate(v)) for k, v in acc.items()}
    rows = []
    for name in ("standard", "corrected", "population"):
        means = [stats[(s, name)][0] for s in sigmas]
        mc_argmin = sigmas[int(np.argmin(means))]
        analytic_argmin = standard_optimal_sigma(m) if name == "standard" else 1.0
        for s in sigmas:
            analytic = expected_standard_score(s, m) if name == "standard" else expected_population_score(s)
            mean, se = stats[(s, name)]
            rows.append((m, s, name, mean, se, spec.replicates, analytic, analytic_argmin, mc_argmin))
    return rows


def run_sigma_sweep(spec, workers=1):
    """Mean scores of N(0, sigma^2) ensembles verified against N(0, 1) observations."""
    spec.validate()
    if spec.kind is not Kind.SIGMA_SWEEP:
        raise ValidationError(f"expected a {Kind.SIGMA_SWEEP.value} spec, got {spec.kind.value}")
    chunks = _map(_sigma_unit, [(spec, m) for m in spec.m_values], workers)
    rows = [row for chunk in chunks for row in chunk]
    columns = ("m", "sigma", "estimator", "mean", "se", "replicates", "analytic",
               "analytic_argmin_sigma", "mc_argmin_sigma")
    return _finish(spec, columns, rows)


# --- subsampling comparison -----------------------------------------------

def _series_digest(series):
    return hashlib.sha256(series_to_csv(series).encode("utf-8")).hexdigest()


def _mean_scores(members, obs, m):
    # members: (R, n, m); returns per-replicate time-averaged standard and corrected scores
    mean, var = ensemble_moments(members)
    check_positive_variance(var)
    std = standard_from_moments(mean, var, obs).mean(axis=1)
    cor = corrected_from_moments(mean, var, obs, m).mean(axis=1)
    return std, cor


def _subsample_unit(args):
    spec, a, b, k = args
    rng = RngStream(spec.seed, 0, (stable_hash(spec.kind.value, k),)).generator()
    R = spec.replicates
    idx_a = draw_subsets(rng, a.n, a.m, k, R)
    idx_b = idx_a if b.m == a.m else draw_subsets(rng, b.n, b.m, k, R)
    pick_a = np.take_along_axis(np.broadcast_to(a.members, (R,) + a.members.shape), idx_a, axis=2)
    pick_b = np.take_along_axis(np.broadcast_to(b.members, (R,) + b.members.shape), idx_b, axis=2)
    std_a, cor_a = _mean_scores(pick_a, a.observations, k)
    std_b, cor_b = _mean_scores(pick_b, b.observations, k)
    rows = []
    for name, sa, sb in (("standard", std_a, std_b), ("corrected", cor_a, cor_b)):
        for label, values in (("a", sa), ("b", sb), ("a-b", sa - sb)):
            mean, se = _summary(values)
            rows.append((k, label, name, mean, se, R))
    return rows


def run_subsample_compare(series_a, series_b, spec, workers=1):
    """Compare two forecast series on the same observations over random sub-ensembles.

    ``series_b=None`` compares against the leave-one-out climatology of
    ``series_a``. When both series have the same member count the same
    member subsets are used for both (paired comparison).
    """
    spec.validate()
    if spec.kind is not Kind.SUBSAMPLE:
        raise ValidationError(f"expected a {Kind.SUBSAMPLE.value} spec, got {spec.kind.value}")
    if series_b is None:
        series_b = climatology_series(series_a)
    if series_a.times != series_b.times or not np.array_equal(
        series_a.observations, series_b.observations
    ):
        raise ValidationError("series must share the same time axis and observations")
    largest = min(series_a.m, series_b.m)
    sizes = spec.sizes or tuple(range(MIN_SIZE_CORRECTED, largest + 1))
    if max(sizes) > largest:
        raise ValidationError(f"subensemble size {max(sizes)} exceeds available members {largest}")
    spec = replace(spec, sizes=tuple(sizes))
    chunks = _map(_subsample_unit, [(spec, series_a, series_b, k) for k in sizes], workers)
    rows = [row for chunk in chunks for row in chunk]
    columns = ("m_tilde", "series", "estimator", "mean", "se", "replicates")
    inputs = {"a": _series_digest(series_a), "b": _series_digest(series_b)}
    return _finish(spec, columns, rows, inputs=inputs)


# --- non-Normal data ------------------------------------------------------

def _nonnormal_unit(args):
    spec, theta, m = args
    family = make_family(spec.family, theta)
    key = (stable_hash(spec.kind.value, spec.family, theta, m),)
    names = ("true_density", "normal_oracle", "standard", "corrected")
    parts = {name: [] for name in names}
    for block, size in _blocks(spec.replicates):
        rng = RngStream(spec.seed, block, key).generator()
        x = family.draw(rng, size)
        ens = family.draw(rng, (size, m))
        mean, var = ensemble_moments(ens)
        check_positive_variance(var)
        parts["true_density"].append(-family.logpdf(x))
        parts["normal_oracle"].append(normal_oracle(x))
        parts["standard"].append(standard_from_moments(mean, var, x))
        parts["corrected"].append(corrected_from_moments(mean, var, x, m))
    scores = {k: np.concatenate(v) for k, v in parts.items()}
    reference = scores["true_density"]
    rows = []
    signs = {}
    for name in names:
        mean, se = _summary(scores[name])
        bias, bias_se = _summary(scores[name] - reference)
        signs[name] = 1.0 if bias >= 0 else -1.0
        rows.append((spec.family, theta, m, name, mean, se, spec.replicates, bias, bias_se))
    # paired comparison on the same ensembles: mean is E[standard - corrected],
    # bias is |bias(standard)| - |bias(corrected)|
    mean, se = _summary(scores["standard"] - scores["corrected"])
    gap = (signs["standard"] * (scores["standard"] - reference)
           - signs["corrected"] * (scores["corrected"] - reference))
    bias, bias_se = _summary(gap)
    rows.append((spec.family, theta, m, PAIRED_GAP, mean, se, spec.replicates, bias, bias_se))
    return rows


def run_nonnormal_bias(spec, workers=1):
    """Four Ignorance scores for ensembles and observations from a non-Normal family."""
    spec.validate()
    if spec.kind is not Kind.NONNORMAL:
        raise ValidationError(f"expected a {Kind.NONNORMAL.value} spec, got {spec.kind.value}")
    units = [(spec, theta, m) for theta in spec.theta_values for m in spec.m_values]
    chunks = _map(_nonnormal_unit, units, workers)
    rows = [row for chunk in chunks for row in chunk]
    columns = ("family", "theta", "m", "estimator", "mean", "se", "replicates", "bias", "bias_se")
    return _finish(spec, columns, rows)


RUNNERS = {
    Kind.M_DEPENDENCE: run_m_dependence,
    Kind.SIGMA_SWEEP: run_sigma_sweep,
    Kind.NONNORMAL: run_nonnormal_bias,
}
