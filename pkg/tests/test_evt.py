import math

import numpy as np
import pytest

from jumptail.evt import (
    GpdFit,
    GpdMethod,
    default_threshold,
    empirical_survival,
    extract_exceedances,
    fit_gpd_mle,
    fit_gpd_pwm,
    gpd_log_likelihood,
    gpd_survival,
    hill_curve,
    hill_estimator,
    mean_excess_curve,
    try_fit_gpd_pwm,
)
from jumptail.exceptions import (
    DegenerateExcesses,
    DegenerateTail,
    EmptySample,
    InsufficientPositiveValues,
    PwmDegenerate,
    TooFewExceedances,
)

from . import gpd_sample


def test_empirical_survival_examples():
    assert empirical_survival([1.0, 2.0, 3.0, 4.0], 2.5) == 0.5
    assert empirical_survival([1.0, 2.0, 3.0, 4.0], 4.0) == 0.0
    assert empirical_survival([0.0, 0.0, 0.0, 5.0], 0.0) == 0.25


def test_empirical_survival_on_a_grid():
    survival = empirical_survival([1.0, 2.0, 3.0, 4.0], np.array([0.0, 2.5, 4.0]))
    assert survival.tolist() == [1.0, 0.5, 0.0]


def test_empirical_survival_of_empty_sample():
    with pytest.raises(EmptySample):
        empirical_survival([], 1.0)


def test_extract_exceedances_keeps_sample_order():
    exc = extract_exceedances([1.0, 5.0, 3.0, 9.0], 4.0)
    assert exc.excesses.tolist() == [1.0, 5.0]
    assert exc.count == 2
    assert exc.rate == 0.5


def test_extract_exceedances_can_be_empty():
    exc = extract_exceedances([1.0, 2.0], 10.0)
    assert exc.count == 0
    assert exc.rate == 0.0


def test_default_threshold():
    sample = np.arange(1.0, 101.0)
    assert default_threshold(sample) == pytest.approx(np.quantile(sample, 0.95))
    assert default_threshold([1.0, 2.0, 3.0, 4.0], 0.5) == 2.5


@pytest.mark.parametrize("xi", [0.0, 0.25, 0.5, 1.0])
@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_mle_recovers_gpd_parameters(xi, beta):
    sample = gpd_sample(xi, beta, n=100_000, seed=int(1000 * xi + 10 * beta))
    fit = fit_gpd_mle(extract_exceedances(sample, 0.0))

    assert fit.method is GpdMethod.MLE
    assert fit.xi == pytest.approx(xi, abs=0.02)
    assert fit.beta == pytest.approx(beta, rel=0.03)


@pytest.mark.parametrize("xi", [0.0, 0.25])
@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_pwm_recovers_gpd_parameters(xi, beta):
    sample = gpd_sample(xi, beta, n=100_000, seed=7 + int(100 * xi + beta))
    fit = fit_gpd_pwm(extract_exceedances(sample, 0.0))

    assert fit.method is GpdMethod.PWM
    assert fit.xi == pytest.approx(xi, abs=0.04)
    assert fit.beta == pytest.approx(beta, rel=0.05)


def test_pwm_on_uniform_excesses_is_short_tailed():
    sample = np.random.default_rng(17).random(100_000)
    fit = fit_gpd_pwm(extract_exceedances(sample, 0.0))
    assert fit.xi == pytest.approx(-1.0, abs=0.05)
    assert fit.beta == pytest.approx(1.0, rel=0.05)


def test_mle_on_exponential_excesses():
    sample = np.random.default_rng(23).exponential(scale=3.0, size=100_000)
    fit = fit_gpd_mle(extract_exceedances(sample, 0.0))
    assert abs(fit.xi) <= 0.02
    assert fit.beta == pytest.approx(3.0, rel=0.03)


def test_mle_likelihood_is_at_least_pwm_likelihood():
    for seed in range(5):
        exc = extract_exceedances(gpd_sample(0.3, 1.5, n=2000, seed=seed), 0.0)
        mle, pwm = fit_gpd_mle(exc), fit_gpd_pwm(exc)
        assert mle.log_likelihood >= pwm.log_likelihood - 1e-6


def test_mle_handles_short_tails():
    sample = gpd_sample(-0.3, 1.0, n=50_000, seed=3)
    fit = fit_gpd_mle(extract_exceedances(sample, 0.0))
    assert fit.xi == pytest.approx(-0.3, abs=0.03)
    assert math.isfinite(fit.log_likelihood)


def test_fits_need_thirty_exceedances():
    exc = extract_exceedances(np.arange(1.0, 30.0), 0.0)
    with pytest.raises(TooFewExceedances):
        fit_gpd_mle(exc)
    with pytest.raises(TooFewExceedances):
        fit_gpd_pwm(exc)


def test_mle_rejects_equal_excesses():
    with pytest.raises(DegenerateExcesses):
        fit_gpd_mle(extract_exceedances(np.full(40, 2.0), 1.0))


def test_pwm_degenerate_moments():
    exc = extract_exceedances(np.full(40, 2.0), 1.0)
    with pytest.raises(PwmDegenerate):
        fit_gpd_pwm(exc)
    with pytest.warns(UserWarning, match="PWM fit skipped"):
        assert try_fit_gpd_pwm(exc) is None


def test_log_likelihood_outside_domain():
    z = np.array([0.5, 1.0, 3.0])
    assert gpd_log_likelihood(z, 0.2, 0.0) == -math.inf
    # 1 + xi z / beta <= 0 at z = 3
    assert gpd_log_likelihood(z, -0.5, 1.0) == -math.inf
    assert gpd_log_likelihood(z, 0.0, 1.0) == pytest.approx(-4.5)


def test_gpd_survival_properties():
    heavy = GpdFit(xi=0.5, beta=1.0, log_likelihood=0.0, method=GpdMethod.MLE, n_exceedances=100)
    short = GpdFit(xi=-0.5, beta=1.0, log_likelihood=0.0, method=GpdMethod.MLE, n_exceedances=100)
    flat = GpdFit(xi=0.0, beta=2.0, log_likelihood=0.0, method=GpdMethod.MLE, n_exceedances=100)

    assert gpd_survival(heavy, 0.0) == 1.0
    assert gpd_survival(heavy, -1.0) == 1.0
    assert gpd_survival(heavy, 2.0) == pytest.approx(0.25)
    assert gpd_survival(short, 1.0) == pytest.approx(0.25)
    assert gpd_survival(short, 3.0) == 0.0
    assert gpd_survival(flat, 2.0) == pytest.approx(math.exp(-1.0))

    values = gpd_survival(heavy, np.linspace(0.0, 100.0, 50))
    assert np.all(np.diff(values) < 0.0)


def test_standard_errors():
    fit = GpdFit(xi=0.5, beta=2.0, log_likelihood=0.0, method=GpdMethod.MLE, n_exceedances=400)
    assert fit.se_xi == pytest.approx(1.5 / 20.0)
    assert fit.se_beta == pytest.approx(2.0 * math.sqrt(3.0 / 400.0))


@pytest.fixture(scope="module")
def pareto_two():
    """Pareto(scale 1, tail index 2) draws."""
    return (1.0 - np.random.default_rng(5).random(200_000)) ** -0.5


def test_hill_on_pareto(pareto_two):
    estimate = hill_estimator(pareto_two, 2000)
    assert estimate.k == 2000
    assert estimate.tail_index == pytest.approx(2.0, abs=0.15)
    assert estimate.hill == pytest.approx(1.0 / estimate.tail_index)


def test_hill_is_scale_invariant(pareto_two):
    plain = hill_estimator(pareto_two, 500)
    scaled = hill_estimator(7.5 * pareto_two, 500)
    assert scaled.hill == pytest.approx(plain.hill, rel=1e-10)


def test_hill_curve_agrees_with_estimator(pareto_two):
    ks = [10, 100, 1000]
    curve = hill_curve(pareto_two, ks)
    assert [e.k for e in curve] == ks
    for estimate in curve:
        assert estimate.hill == pytest.approx(hill_estimator(pareto_two, estimate.k).hill)


def test_hill_curve_skips_unusable_k():
    sample = np.concatenate([np.zeros(50), np.arange(1.0, 21.0)])
    assert [e.k for e in hill_curve(sample, [0, 5, 19, 20, 30])] == [5, 19]


def test_hill_input_errors():
    with pytest.raises(ValueError):
        hill_estimator(np.arange(1.0, 100.0), 9)
    with pytest.raises(InsufficientPositiveValues):
        hill_estimator(np.concatenate([np.zeros(100), np.arange(1.0, 6.0)]), 10)
    with pytest.raises(DegenerateTail):
        hill_estimator(np.full(20, 3.0), 10)


def test_mean_excess_small_example():
    points = mean_excess_curve([1.0, 2.0, 3.0, 4.0], [0.0, 2.5, 4.0])

    assert [p.count for p in points] == [4, 2, 0]
    assert points[0].mean_excess == 2.5
    assert points[1].mean_excess == 1.0
    assert math.isnan(points[2].mean_excess)
    assert all(p.flagged for p in points)


def test_mean_excess_thresholds_must_ascend():
    with pytest.raises(ValueError):
        mean_excess_curve([1.0, 2.0], [2.0, 1.0])


def test_mean_excess_of_gpd_is_linear():
    sample = gpd_sample(0.5, 1.0, n=1_000_000, seed=41)
    thresholds = np.linspace(0.0, np.quantile(sample, 0.9), 20)
    points = mean_excess_curve(sample, thresholds)

    assert not any(p.flagged for p in points)
    slope = np.polyfit(thresholds, [p.mean_excess for p in points], 1)[0]
    # e(u) = (beta + xi u) / (1 - xi)
    assert slope == pytest.approx(1.0, abs=0.2)


def test_mean_excess_of_exponential_is_flat():
    sample = np.random.default_rng(43).exponential(scale=0.5, size=1_000_000)
    thresholds = np.linspace(0.0, np.quantile(sample, 0.9), 10)
    for point in mean_excess_curve(sample, thresholds):
        assert point.mean_excess == pytest.approx(0.5, abs=0.05)
