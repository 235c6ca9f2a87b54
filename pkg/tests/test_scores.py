import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ensemble_ignorance.exceptions import (
    DegenerateEnsembleError,
    EnsembleSizeError,
    ValidationError,
)
from ensemble_ignorance.scores import (
    HALF_LOG_2PI,
    Estimator,
    GaussianParams,
    ScoreReport,
    ScoreValue,
    convert_units,
    corrected_from_moments,
    ensemble_moments,
    expected_standard_bias,
    extrapolated_from_moments,
    fit_gaussian,
    ignorance_bias_corrected,
    ignorance_extrapolated,
    ignorance_population,
    ignorance_standard,
    mean_score,
    score_ensembles,
    score_variances,
    standard_bias,
    standard_from_moments,
    variance_difference,
)

from oracles import EULER_GAMMA, digamma_series, neg_log_normal_pdf, sample_variance

POP_AT_ZERO = 0.9189385332046727  # 0.5 ln(2 pi)


def _mc_moments(rng, mu, var, m, reps):
    members = mu + math.sqrt(var) * rng.standard_normal((reps, m))
    return ensemble_moments(members)


# --- examples -------------------------------------------------------------

@pytest.mark.parametrize(
    "mu, var, x, expected",
    [
        (0.0, 1.0, 0.0, POP_AT_ZERO),
        (0.0, 1.0, 1.0, POP_AT_ZERO + 0.5),
        (2.0, 4.0, 0.0, 2.112085713764618),
    ],
)
def test_population_examples(mu, var, x, expected):
    score = ignorance_population(GaussianParams(mu, var), x)
    assert score.estimator is Estimator.POPULATION
    assert score.value == pytest.approx(expected, abs=1e-12)
    assert score.value == pytest.approx(neg_log_normal_pdf(mu, var, x), abs=1e-12)


def test_fit_gaussian_examples():
    assert fit_gaussian([1, 3]) == GaussianParams(2.0, 2.0)
    params = fit_gaussian([-1, 0, 1, 2])
    assert params.mean == pytest.approx(0.5)
    assert params.variance == pytest.approx(5.0 / 3.0)
    assert params.variance == pytest.approx(sample_variance([-1, 0, 1, 2]))


@pytest.mark.parametrize("members", [[0, 0, 0], [0.1, 0.1, 0.1, 0.1], [7.0, 7.0]])
def test_fit_gaussian_degenerate(members):
    with pytest.raises(DegenerateEnsembleError):
        fit_gaussian(members)


def test_fit_gaussian_rejects_bad_input():
    with pytest.raises(EnsembleSizeError):
        fit_gaussian([1.0])
    with pytest.raises(ValidationError):
        fit_gaussian([1.0, float("nan")])
    with pytest.raises(ValidationError):
        GaussianParams(0.0, 0.0)
    with pytest.raises(ValidationError):
        GaussianParams(float("inf"), 1.0)


@pytest.mark.parametrize(
    "members, x, expected",
    [
        ([-1, 1], 0.0, 1.2655121234846454),
        ([0, 2, 4], 2.0, 1.612085713764618),
    ],
)
def test_standard_examples(members, x, expected):
    score = ignorance_standard(members, x)
    assert score.value == pytest.approx(expected, abs=1e-12)
    assert score.ensemble_size == len(members)
    assert score.estimator is Estimator.STANDARD


def test_standard_with_zero_error_term():
    members = [1.0, 2.0, 4.0, 5.0]
    params = fit_gaussian(members)
    value = ignorance_standard(members, params.mean).value
    assert value == pytest.approx(POP_AT_ZERO + 0.5 * math.log(params.variance), abs=1e-12)


def test_corrected_example():
    psi_15 = 2.0 - EULER_GAMMA - 2.0 * math.log(2.0)
    expected = POP_AT_ZERO + 0.5 * math.log(5 / 6) - 0.5 * (psi_15 - math.log(1.5) + 0.25)
    assert expected == pytest.approx(0.8872653218724892, abs=1e-14)
    value = ignorance_bias_corrected([-1, -0.5, 0.5, 1], 0.0).value
    assert value == pytest.approx(expected, abs=1e-12)


def test_corrected_rejects_small_ensembles():
    with pytest.raises(EnsembleSizeError, match="minimum ensemble size 4"):
        ignorance_bias_corrected([0.0, 1.0, 2.0], 0.0)
    with pytest.raises(DegenerateEnsembleError):
        ignorance_bias_corrected([1.0] * 5, 0.0)


def test_corrected_approaches_population_for_large_m():
    mean, var, x = 0.3, 1.7, -0.4
    pop = float(standard_from_moments(mean, var, x))
    gaps = [abs(float(corrected_from_moments(mean, var, x, m)) - pop) for m in (10, 100, 1000, 10**5)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-4


def test_corrected_unbiased_monte_carlo(rng):
    m, x, reps = 5, 1.0, 1_000_000
    mean, var = _mc_moments(rng, 0.0, 1.0, m, reps)
    scores = corrected_from_moments(mean, var, x, m)
    se = scores.std(ddof=1) / math.sqrt(reps)
    assert abs(scores.mean() - (POP_AT_ZERO + 0.5)) < 3 * se


def test_extrapolated_identity_and_limit(rng):
    for m in (4, 5, 8, 21, 51):
        members = rng.normal(size=m)
        x = float(rng.normal())
        same = ignorance_extrapolated(members, x, m).value
        assert abs(same - ignorance_standard(members, x).value) <= 1e-12
        far = ignorance_extrapolated(members, x, 10**8).value
        assert abs(far - ignorance_bias_corrected(members, x).value) <= 1e-6


def test_extrapolated_matches_larger_ensembles_monte_carlo(rng):
    reps, x = 1_000_000, 0.0
    mean8, var8 = _mc_moments(rng, 0.0, 1.0, 8, reps)
    extrap = extrapolated_from_moments(mean8, var8, x, 8, 20)
    mean20, var20 = _mc_moments(rng, 0.0, 1.0, 20, reps)
    direct = standard_from_moments(mean20, var20, x)
    se = math.hypot(extrap.std(ddof=1), direct.std(ddof=1)) / math.sqrt(reps)
    assert abs(extrap.mean() - direct.mean()) < 3 * se


def test_extrapolated_rejects_small_sizes():
    with pytest.raises(EnsembleSizeError):
        ignorance_extrapolated([0, 1, 2], 0.0, 10)
    with pytest.raises(EnsembleSizeError):
        ignorance_extrapolated([0, 1, 2, 3], 0.0, 3)


# --- bias and variance formulas ------------------------------------------

def test_expected_bias_examples():
    expected = 0.5 * (digamma_series(2.0) - math.log(2.0)) + 0.2
    value = expected_standard_bias(GaussianParams(0, 1), 0.0, 5)
    assert value == pytest.approx(expected, abs=1e-10)
    assert value == pytest.approx(0.06481857726926082, abs=1e-10)
    # observation averaged over N(0, 1): E[(x - mu)^2 / sigma^2] = 1
    assert standard_bias(5, 1.0) == pytest.approx(0.5648185772692608, abs=1e-10)
    assert abs(standard_bias(10**7, 1.0)) < 1e-6
    with pytest.raises(EnsembleSizeError):
        expected_standard_bias(GaussianParams(0, 1), 0.0, 3)


@pytest.mark.parametrize("mu, var, x, m", [(1.5, 4.0, -1.0, 4), (1.5, 4.0, 3.0, 10), (-2.0, 0.25, -2.0, 50)])
def test_bias_formula_monte_carlo(rng, mu, var, x, m):
    reps = 1_000_000
    mean, var_hat = _mc_moments(rng, mu, var, m, reps)
    params = GaussianParams(mu, var)
    excess = standard_from_moments(mean, var_hat, x) - ignorance_population(params, x).value
    se = excess.std(ddof=1) / math.sqrt(reps)
    assert abs(excess.mean() - expected_standard_bias(params, x, m)) < 4 * se

    corrected = corrected_from_moments(mean, var_hat, x, m)
    se_c = corrected.std(ddof=1) / math.sqrt(reps)
    assert abs(corrected.mean() - ignorance_population(params, x).value) < 4 * se_c


def test_score_variances_examples():
    r = score_variances(0.0, 10)
    assert r.var_standard == pytest.approx(1 / 18)
    assert r.var_corrected == pytest.approx(1 / 18)
    assert r.bias is None
    r = score_variances(1.0, 5)
    assert r.var_standard == pytest.approx(0.2)
    assert r.var_corrected == pytest.approx(0.08125)
    r = score_variances(0.5, 5, params=GaussianParams(0, 1), x=0.0)
    assert r.bias == pytest.approx(0.06481857726926082)
    with pytest.raises(EnsembleSizeError):
        score_variances(1.0, 3)


@settings(max_examples=500, deadline=None)
@given(st.floats(min_value=-50, max_value=50), st.integers(min_value=4, max_value=10_000))
def test_variance_dominance(z, m):
    r = score_variances(z, m)
    assert r.variance_reduction >= -1e-12 * max(1.0, r.var_standard)
    assert r.variance_reduction == pytest.approx(variance_difference(z, m), rel=1e-9, abs=1e-12)


# --- invariances ---------------------------------------------------------

_member_lists = st.lists(st.floats(min_value=-100, max_value=100), min_size=4, max_size=30)


@settings(max_examples=200, deadline=None)
@given(_member_lists, st.floats(-100, 100), st.floats(-1e3, 1e3))
def test_location_equivariance(members, x, shift):
    assume(np.ptp(members) > 1e-3)
    shifted = [v + shift for v in members]
    for func in (ignorance_standard, ignorance_bias_corrected):
        assert func(shifted, x + shift).value == pytest.approx(func(members, x).value, abs=1e-6)
    assert ignorance_extrapolated(shifted, x + shift, 40).value == pytest.approx(
        ignorance_extrapolated(members, x, 40).value, abs=1e-6
    )


@settings(max_examples=200, deadline=None)
@given(_member_lists, st.floats(-100, 100), st.floats(1e-3, 1e3))
def test_scale_adds_log_factor(members, x, s):
    assume(np.ptp(members) > 1e-3)
    scaled = [v * s for v in members]
    for func in (ignorance_standard, ignorance_bias_corrected):
        assert func(scaled, x * s).value == pytest.approx(func(members, x).value + math.log(s), abs=1e-8)
    assert ignorance_extrapolated(scaled, x * s, 9).value == pytest.approx(
        ignorance_extrapolated(members, x, 9).value + math.log(s), abs=1e-8
    )


def test_population_scale_relation():
    base = ignorance_population(GaussianParams(1.0, 2.0), 3.0).value
    scaled = ignorance_population(GaussianParams(2.5, 2.0 * 2.5**2), 7.5).value
    assert scaled == pytest.approx(base + math.log(2.5), abs=1e-12)


def test_fairness_optimum_analytic():
    # expected corrected score equals the population curve, minimised at sigma = 1;
    # the expected standard score is minimised at the overdispersive sqrt((m-1)/(m-3))
    sigmas = np.round(np.arange(0.6, 1.61, 0.1), 1)
    pop = [HALF_LOG_2PI + 0.5 * math.log(s * s) + 0.5 / (s * s) for s in sigmas]
    assert sigmas[int(np.argmin(pop))] == 1.0
    std5 = [p + standard_bias(5, 1 / (s * s)) for p, s in zip(pop, sigmas)]
    assert sigmas[int(np.argmin(std5))] == 1.4


# --- value types, units, batch -------------------------------------------

def test_score_value_invariants():
    with pytest.raises(EnsembleSizeError):
        ScoreValue(1.0, Estimator.STANDARD, ensemble_size=1)
    with pytest.raises(EnsembleSizeError):
        ScoreValue(1.0, Estimator.BIAS_CORRECTED, ensemble_size=3)
    with pytest.raises(EnsembleSizeError):
        ScoreValue(1.0, Estimator.EXTRAPOLATED, ensemble_size=5, target_size=2)
    with pytest.raises(ValidationError):
        ScoreValue(float("inf"), Estimator.POPULATION)
    assert float(ScoreValue(1.5, Estimator.POPULATION)) == 1.5


def test_units():
    v = ignorance_standard([-1, 1], 0.0)
    assert v.in_units("bits") == pytest.approx(v.value / math.log(2))
    assert v.in_units("bans") == pytest.approx(v.value / math.log(10))
    assert convert_units(0.5, "bits") == pytest.approx(0.7213475204444817)
    with pytest.raises(ValidationError):
        convert_units(1.0, "furlongs")


def test_batch_matches_scalar(rng):
    members = rng.normal(size=(25, 7))
    obs = rng.normal(size=25)
    for estimator, func in (
        ("standard", ignorance_standard),
        ("corrected", ignorance_bias_corrected),
    ):
        batch = score_ensembles(members, obs, estimator)
        scalar = [func(row, x).value for row, x in zip(members, obs)]
        np.testing.assert_allclose(batch, scalar, rtol=0, atol=1e-12)
    batch = score_ensembles(members, obs, "extrapolated", target_size=51)
    scalar = [ignorance_extrapolated(row, x, 51).value for row, x in zip(members, obs)]
    np.testing.assert_allclose(batch, scalar, rtol=0, atol=1e-12)


def test_batch_degenerate_rows():
    members = np.array([[0.0, 1.0, 2.0, 3.0], [1.0, 1.0, 1.0, 1.0], [2.0, 0.0, 1.0, 5.0]])
    obs = np.zeros(3)
    with pytest.raises(DegenerateEnsembleError):
        score_ensembles(members, obs, "corrected")
    out = score_ensembles(members, obs, "corrected", skip_degenerate=True)
    assert np.isnan(out[1]) and np.all(np.isfinite(out[[0, 2]]))
    report = ScoreReport(Estimator.BIAS_CORRECTED, out)
    assert report.mean == pytest.approx(np.nanmean(out))


def test_mean_score_is_order_independent(rng):
    values = rng.normal(size=10_001) * 1e6
    assert mean_score(values) == mean_score(values[::-1]) == mean_score(rng.permutation(values))
