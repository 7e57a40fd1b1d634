"""Peaks-over-threshold statistics: exceedances, GPD fits, Hill estimates and mean excess.

The GPD is fitted to the conditional law of the excesses z = y - u given y > u:

    Pr(Z > z) = (1 + xi * z / beta) ** (-1 / xi),    xi != 0
    Pr(Z > z) = exp(-z / beta),                      xi == 0

Unconditional tail probabilities are recovered as (n_u / n) * Pr(Z > y - u).
"""
# pylint: disable=invalid-name
import math
import warnings
from collections import namedtuple
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import optimize

from jumptail.exceptions import (
    DegenerateExcesses,
    DegenerateTail,
    EmptySample,
    InsufficientPositiveValues,
    PwmDegenerate,
    TooFewExceedances,
)

MIN_EXCEEDANCES = 30
MIN_HILL_K = 10
MEAN_EXCESS_MIN_COUNT = 10
DEFAULT_THRESHOLD_QUANTILE = 0.95

THETA_UPPER = 10.0
THETA_EDGE = 1e-8
THETA_ZERO = 1e-10

MeanExcessPoint = namedtuple("MeanExcessPoint", "u, mean_excess, count, flagged")


class GpdMethod(str, Enum):
    """Estimator used for a GPD fit."""

    MLE = "mle"
    PWM = "pwm"


@dataclass(frozen=True)
class ExceedanceSet:
    """Excesses over a threshold u, in sample order."""

    u: float
    excesses: np.ndarray
    n_total: int

    @property
    def count(self) -> int:
        return int(self.excesses.size)

    @property
    def rate(self) -> float:
        """Fraction of the source sample above u."""
        return self.count / self.n_total if self.n_total else 0.0


@dataclass(frozen=True)
class GpdFit:
    """Shape and scale of a GPD fitted to excesses."""

    xi: float
    beta: float
    log_likelihood: float
    method: GpdMethod
    n_exceedances: int

    @property
    def se_xi(self) -> float:
        """Asymptotic standard error of xi, (1 + xi) / sqrt(n)."""
        return (1.0 + self.xi) / math.sqrt(self.n_exceedances)

    @property
    def se_beta(self) -> float:
        """Asymptotic standard error of beta, beta * sqrt(2 (1 + xi) / n)."""
        return self.beta * math.sqrt(max(2.0 * (1.0 + self.xi), 0.0) / self.n_exceedances)


@dataclass(frozen=True)
class HillEstimate:
    """Hill's estimate from the k largest order statistics."""

    k: int
    hill: float
    tail_index: float


def _as_sample(sample) -> np.ndarray:
    return np.asarray(sample, dtype=float).reshape(-1)


def empirical_survival(sample, y):
    """Fraction of the sample strictly greater than y (y may be an array).

    Raises
    ------
    EmptySample
    """
    values = _as_sample(sample)
    if values.size == 0:
        raise EmptySample("Empirical survival of an empty sample is undefined.")
    if np.ndim(y) == 0:
        return np.count_nonzero(values > float(y)) / values.size
    ordered = np.sort(values)
    above = values.size - np.searchsorted(ordered, np.asarray(y, dtype=float), side="right")
    return above / values.size


def extract_exceedances(sample, u: float) -> ExceedanceSet:
    """Collect y - u for every y > u, preserving sample order."""
    values = _as_sample(sample)
    u = float(u)
    excesses = values[values > u] - u
    return ExceedanceSet(u=u, excesses=excesses, n_total=int(values.size))


def default_threshold(sample, quantile: float = DEFAULT_THRESHOLD_QUANTILE) -> float:
    """Empirical ``quantile`` of the sample, the POT threshold used when none is chosen."""
    values = _as_sample(sample)
    if values.size == 0:
        raise EmptySample("Cannot choose a threshold for an empty sample.")
    return float(np.quantile(values, quantile))


def gpd_log_likelihood(excesses, xi: float, beta: float) -> float:
    """GPD log-likelihood of the excesses; -inf outside the parameter domain."""
    z = _as_sample(excesses)
    if not beta > 0.0:
        return -math.inf
    n = z.size
    if abs(xi) < THETA_ZERO:
        return float(-n * math.log(beta) - np.sum(z) / beta)
    t = xi * z / beta
    if np.any(t <= -1.0):
        return -math.inf
    return float(-n * math.log(beta) - (1.0 + 1.0 / xi) * np.sum(np.log1p(t)))


def gpd_survival(fit: GpdFit, excess):
    """Conditional survival Pr(Z > excess) under a fitted GPD; equals 1 at excess 0."""
    scalar = np.ndim(excess) == 0
    z = np.atleast_1d(np.asarray(excess, dtype=float))
    out = np.ones_like(z)
    positive = z > 0.0
    if abs(fit.xi) < THETA_ZERO:
        out[positive] = np.exp(-z[positive] / fit.beta)
    else:
        t = 1.0 + fit.xi * z[positive] / fit.beta
        with np.errstate(divide="ignore", invalid="ignore"):
            out[positive] = np.where(t > 0.0, np.abs(t) ** (-1.0 / fit.xi), 0.0)
    return float(out[0]) if scalar else out


def _check_fit_input(exc: ExceedanceSet) -> np.ndarray:
    if exc.count < MIN_EXCEEDANCES:
        raise TooFewExceedances(
            f"A GPD fit needs at least {MIN_EXCEEDANCES} exceedances, got {exc.count}."
        )
    return _as_sample(exc.excesses)


def _profile_objective(theta: float, z: np.ndarray) -> float:
    """Negative profile log-likelihood per excess at theta = xi / beta."""
    if abs(theta) < THETA_ZERO:
        return math.log(float(np.mean(z))) + 1.0
    logs = np.log1p(theta * z)
    xi = float(np.mean(logs))
    ratio = xi / theta
    if not ratio > 0.0:
        return math.inf
    return math.log(ratio) + xi + 1.0


def fit_gpd_mle(exc: ExceedanceSet) -> GpdFit:
    """Maximum-likelihood GPD fit by a one-dimensional profile search.

    With theta = xi / beta the likelihood profiles to a function of theta alone, with
    xi(theta) = mean(log(1 + theta z)) and beta = xi / theta. The search runs over
    theta in [-1/max(z) + 1e-8, 10] after rescaling z by its median: a coarse grid
    brackets the optimum and a bounded scalar minimizer refines it. theta within 1e-10
    of zero is the exponential limit beta = mean(z), xi = 0.

    Raises
    ------
    TooFewExceedances
        fewer than 30 excesses
    DegenerateExcesses
        all excesses equal
    """
    z = _check_fit_input(exc)
    if np.all(z == z[0]):
        raise DegenerateExcesses("All excesses are equal; the GPD likelihood is unbounded.")

    scale = float(np.median(z))
    zs = z / scale
    lower = -1.0 / float(np.max(zs)) + THETA_EDGE

    grid = np.unique(
        np.concatenate(
            [np.linspace(lower, 0.0, 33)[:-1], [0.0], np.geomspace(1e-6, THETA_UPPER, 64)]
        )
    )
    values = np.array([_profile_objective(t, zs) for t in grid])
    best = int(np.argmin(values))
    theta_best, value_best = float(grid[best]), float(values[best])

    bracket = (float(grid[max(best - 1, 0)]), float(grid[min(best + 1, grid.size - 1)]))
    if bracket[0] < bracket[1]:
        refined = optimize.minimize_scalar(
            _profile_objective,
            bounds=bracket,
            args=(zs,),
            method="bounded",
            options={"xatol": 1e-12, "maxiter": 500},
        )
        if refined.success and float(refined.fun) <= value_best:
            theta_best = float(refined.x)

    if abs(theta_best) < THETA_ZERO:
        xi, beta = 0.0, float(np.mean(z))
    else:
        xi = float(np.mean(np.log1p(theta_best * zs)))
        beta = scale * xi / theta_best

    return GpdFit(
        xi=xi,
        beta=beta,
        log_likelihood=gpd_log_likelihood(z, xi, beta),
        method=GpdMethod.MLE,
        n_exceedances=exc.count,
    )


def fit_gpd_pwm(exc: ExceedanceSet) -> GpdFit:
    """Probability-weighted-moment GPD fit.

    With ascending order statistics z_(1..n), b0 = mean(z) and
    b1 = sum z_(i) (n - i) / (n - 1) / n, the estimates are
    xi = 2 - b0 / (b0 - 2 b1) and beta = 2 b0 b1 / (b0 - 2 b1).

    Raises
    ------
    TooFewExceedances
    PwmDegenerate
        if b0 - 2 b1 <= 0
    """
    z = np.sort(_check_fit_input(exc))
    n = z.size
    weights = (n - np.arange(1, n + 1)) / (n - 1.0)
    b0 = float(np.mean(z))
    b1 = float(np.sum(z * weights) / n)
    denominator = b0 - 2.0 * b1
    if not denominator > 1e-12 * abs(b0):
        raise PwmDegenerate(f"b0 - 2*b1 = {denominator!r}; the PWM equations have no GPD solution.")

    xi = 2.0 - b0 / denominator
    beta = 2.0 * b0 * b1 / denominator
    return GpdFit(
        xi=xi,
        beta=beta,
        log_likelihood=gpd_log_likelihood(z, xi, beta),
        method=GpdMethod.PWM,
        n_exceedances=n,
    )


def try_fit_gpd_pwm(exc: ExceedanceSet) -> Optional[GpdFit]:
    """PWM fit, or None with a warning when the moments are degenerate."""
    try:
        return fit_gpd_pwm(exc)
    except (PwmDegenerate, TooFewExceedances) as err:
        warnings.warn(f"PWM fit skipped: {err}")
        return None


def hill_estimator(sample, k: int) -> HillEstimate:
    """Hill's estimator from the k largest values.

    hill = (1/k) sum_{i=1..k} log(x_(n-i+1) / x_(n-k)) with ascending order statistics,
    and tail_index = 1 / hill.

    Raises
    ------
    InsufficientPositiveValues
        fewer than k + 1 strictly positive values
    DegenerateTail
        the k + 1 largest values are all equal
    """
    k = int(k)
    if k < MIN_HILL_K:
        raise ValueError(f"The Hill estimator needs k >= {MIN_HILL_K}, got {k}.")
    ordered = np.sort(_as_sample(sample))
    n = ordered.size
    if np.count_nonzero(ordered > 0.0) < k + 1:
        raise InsufficientPositiveValues(
            f"The Hill estimator with k={k} needs {k + 1} positive values."
        )
    reference = ordered[n - k - 1]
    hill = float(np.mean(np.log(ordered[n - k :] / reference)))
    if hill == 0.0:
        raise DegenerateTail(f"The {k + 1} largest values are equal; the tail index is infinite.")
    return HillEstimate(k=k, hill=hill, tail_index=1.0 / hill)


def hill_curve(sample, ks) -> list:
    """Hill estimates for several k at once (Hill plot data).

    Values of k without k + 1 positive order statistics are skipped.
    """
    positives = np.sort(_as_sample(sample))[::-1]
    positives = positives[positives > 0.0]
    logs = np.log(positives)
    cumulative = np.cumsum(logs)
    estimates = []
    for k in ks:
        k = int(k)
        if k < 1 or k + 1 > positives.size:
            continue
        hill = float(cumulative[k - 1] / k - logs[k])
        tail_index = 1.0 / hill if hill > 0.0 else math.inf
        estimates.append(HillEstimate(k=k, hill=hill, tail_index=tail_index))
    return estimates


def mean_excess_curve(sample, thresholds) -> list:
    """Mean of y - u over y > u for each threshold u, with the exceedance count.

    Points backed by fewer than 10 exceedances are flagged; with none at all the mean
    excess is nan.
    """
    values = np.sort(_as_sample(sample))
    thresholds = np.asarray(thresholds, dtype=float).reshape(-1)
    if thresholds.size > 1 and np.any(np.diff(thresholds) < 0.0):
        raise ValueError("Mean-excess thresholds must be in ascending order.")

    points = []
    for u in thresholds:
        start = int(np.searchsorted(values, u, side="right"))
        count = values.size - start
        mean_excess = float(np.mean(values[start:] - u)) if count else math.nan
        points.append(
            MeanExcessPoint(float(u), mean_excess, count, count < MEAN_EXCESS_MIN_COUNT)
        )
    return points
