"""Distribution families used by the simulation studies.

The three non-Normal families are standardised to zero mean and unit
variance and approach the standard Normal in a limit of their shape
parameter ``theta``.

Sampling is backed by ``numpy.random.Generator`` on a PCG64 bit generator:
Normal variates use numpy's ziggurat method and Gamma variates use the
Marsaglia-Tsang squeeze (with the shape < 1 boost). Golden experiment files
depend on this choice.
"""
import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import OutOfSupportError, ValidationError
from .special import log_gamma
from .validation import check_finite_scalar

_MASK64 = (1 << 64) - 1
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream identified by ``(seed, key..., stream_id)``.

    Streams are derived through ``numpy.random.SeedSequence`` spawn keys, so
    distinct ids give independent streams and the mapping does not depend on
    the order in which streams are created.
    """

    seed: int
    stream_id: int = 0
    key: tuple = ()

    def generator(self):
        spawn_key = tuple(int(k) & _MASK64 for k in self.key) + (int(self.stream_id) & _MASK64,)
        ss = np.random.SeedSequence(int(self.seed) & _MASK64, spawn_key=spawn_key)
        return np.random.Generator(np.random.PCG64(ss))


def stable_hash(*parts):
    """64-bit hash of ``repr(parts)``; stable across processes, unlike ``hash``."""
    digest = hashlib.blake2b(repr(parts).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class Family:
    name = "family"

    def draw(self, rng, size):
        raise NotImplementedError

    def logpdf(self, x):
        raise NotImplementedError

    def in_support(self, x):
        return np.ones(np.shape(x), dtype=bool)


@dataclass(frozen=True)
class Normal(Family):
    mean: float = 0.0
    variance: float = 1.0
    name = "normal"

    def __post_init__(self):
        check_finite_scalar(self.mean, "mean")
        if not check_finite_scalar(self.variance, "variance") > 0:
            raise ValidationError(f"Normal variance must be positive, got {self.variance!r}")

    def draw(self, rng, size):
        return self.mean + math.sqrt(self.variance) * rng.standard_normal(size)

    def logpdf(self, x):
        return -_HALF_LOG_2PI - 0.5 * math.log(self.variance) - 0.5 * (x - self.mean) ** 2 / self.variance


@dataclass(frozen=True)
class ScaledStudentT(Family):
    """Student t with ``dof`` degrees of freedom, rescaled to unit variance."""

    dof: float
    name = "t"

    def __post_init__(self):
        if not check_finite_scalar(self.dof, "dof") > 2:
            raise ValidationError(f"t family needs dof > 2 for finite variance, got {self.dof!r}")

    @property
    def scale(self):
        return math.sqrt((self.dof - 2.0) / self.dof)

    def draw(self, rng, size):
        z = rng.standard_normal(size)
        chi2 = 2.0 * rng.standard_gamma(0.5 * self.dof, size)
        return self.scale * z / np.sqrt(chi2 / self.dof)

    def logpdf(self, x):
        nu = self.dof
        t = np.asarray(x, dtype=float) / self.scale
        const = (
            log_gamma(0.5 * (nu + 1.0))
            - log_gamma(0.5 * nu)
            - 0.5 * math.log(nu * math.pi)
            - math.log(self.scale)
        )
        return const - 0.5 * (nu + 1.0) * np.log1p(t * t / nu)


@dataclass(frozen=True)
class ScaledShiftedGamma(Family):
    """Gamma(shape, rate=sqrt(shape)) shifted by its mean sqrt(shape)."""

    shape: float
    name = "gamma"

    def __post_init__(self):
        if not check_finite_scalar(self.shape, "shape") > 0:
            raise ValidationError(f"Gamma family needs shape > 0, got {self.shape!r}")

    @property
    def lower(self):
        return -math.sqrt(self.shape)

    def draw(self, rng, size):
        root = math.sqrt(self.shape)
        return rng.standard_gamma(self.shape, size) / root - root

    def in_support(self, x):
        return np.asarray(x, dtype=float) > self.lower

    def logpdf(self, x):
        k = self.shape
        rate = math.sqrt(k)
        g = np.asarray(x, dtype=float) + rate
        with np.errstate(divide="ignore", invalid="ignore"):
            return k * math.log(rate) - log_gamma(k) + (k - 1.0) * np.log(g) - rate * g


@dataclass(frozen=True)
class BimodalMixture(Family):
    """Equal mixture of N(mode, 1 - mode^2) and N(-mode, 1 - mode^2)."""

    mode: float
    name = "bimodal"

    def __post_init__(self):
        theta = check_finite_scalar(self.mode, "mode")
        if not 0.0 <= theta < 1.0:
            raise ValidationError(f"bimodal mode must lie in [0, 1), got {self.mode!r}")

    @property
    def is_bimodal(self):
        return self.mode > math.sqrt(0.5)

    def draw(self, rng, size):
        theta = self.mode
        y = theta + math.sqrt(1.0 - theta * theta) * rng.standard_normal(size)
        sign = 2.0 * rng.integers(0, 2, size) - 1.0
        return sign * y

    def logpdf(self, x):
        theta = self.mode
        var = 1.0 - theta * theta
        x = np.asarray(x, dtype=float)
        base = -_HALF_LOG_2PI - 0.5 * math.log(var) - math.log(2.0)
        return base + np.logaddexp(-0.5 * (x - theta) ** 2 / var, -0.5 * (x + theta) ** 2 / var)


FAMILIES = {
    "normal": lambda theta=None: Normal(),
    "t": ScaledStudentT,
    "gamma": ScaledShiftedGamma,
    "bimodal": BimodalMixture,
}


def make_family(name, theta=None):
    """Build a family by short name (``normal``, ``t``, ``gamma``, ``bimodal``)."""
    try:
        factory = FAMILIES[name]
    except KeyError:
        raise ValidationError(f"unknown family {name!r}; expected one of {sorted(FAMILIES)}") from None
    if name != "normal" and theta is None:
        raise ValidationError(f"family {name!r} needs a theta parameter")
    return factory(theta)


def sample(family, n, stream):
    """Draw ``n`` iid values from ``family`` on ``stream``."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValidationError(f"sample size must be a positive integer, got {n!r}")
    if not isinstance(family, Family):
        raise ValidationError(f"not a distribution family: {family!r}")
    rng = stream.generator() if isinstance(stream, RngStream) else stream
    return family.draw(rng, int(n))


def log_density(family, x):
    """Exact log-density of ``family`` at ``x`` (scalar or array).

    Raises `OutOfSupportError` if any point lies outside the support.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(family.in_support(arr)):
        raise OutOfSupportError(f"{family!r} has no density at some of the points {arr!r}")
    out = family.logpdf(arr)
    return float(out) if np.ndim(out) == 0 else out
