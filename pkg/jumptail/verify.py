"""Numerical checks that the loss tail is the image of the alpha tail.

Two checks are made on a sampled batch:

* event equivalence: for every loss level y, the samples with Y > y are exactly the
  samples whose alpha lies past alpha_c + eta(y), and none of them sits below alpha_c;
* tail match: the empirical survival of Y agrees with the survival computed from the
  alpha law, and a GPD fitted above a high threshold has the predicted shape.
"""
# pylint: disable=invalid-name
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from jumptail.evt import (
    ExceedanceSet,
    GpdFit,
    empirical_survival,
    extract_exceedances,
    fit_gpd_mle,
    gpd_survival,
)
from jumptail.exceptions import InvalidGrid, TooFewExceedances
from jumptail.jumpmap import (
    BranchMode,
    BranchSpec,
    LossMap,
    TailPrediction,
    analytic_survival,
    eta_values,
    predict_tail,
)
from jumptail.sampling import AlphaDistribution, SampleBatch

BOUNDARY_REL_BAND = 1e-12
MIN_TAIL_EXCEEDANCES = 1000
GRID_TOP_QUANTILE = 0.9999
XI_GAP_FLOOR = 0.05


@dataclass(frozen=True)
class EquivalenceReport:
    """Per-level counts from ``check_event_equivalence``, in grid order."""

    y_grid: np.ndarray
    mismatches_per_y: np.ndarray
    boundary_excluded_per_y: np.ndarray
    subset_violations_per_y: np.ndarray
    n: int

    @property
    def passed(self) -> bool:
        return not (np.any(self.mismatches_per_y) or np.any(self.subset_violations_per_y))


@dataclass(frozen=True)
class TailMatchReport:
    """Empirical, exact and fitted views of the loss tail on a common grid.

    ``gpd_survival`` is the unconditional POT estimate (n_u / n) * S_GPD(y - u).
    """

    y_grid: np.ndarray
    empirical_survival: np.ndarray
    analytic_survival: np.ndarray
    gpd_survival: np.ndarray
    xi_fitted: float
    xi_predicted: float
    relative_gap: float
    u: float
    u_quantile: float
    n: int
    fit: GpdFit
    prediction: TailPrediction
    exceedances: ExceedanceSet

    @property
    def standard_errors(self) -> np.ndarray:
        """Binomial standard error of an empirical survival estimate at each grid point."""
        s = self.analytic_survival
        return np.sqrt(s * (1.0 - s) / self.n)

    @property
    def max_standardized_gap(self) -> float:
        """Largest |empirical - analytic| measured in binomial standard errors."""
        diff = np.abs(self.empirical_survival - self.analytic_survival)
        se = self.standard_errors
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0.0, diff / se, np.where(diff > 0.0, math.inf, 0.0))
        return float(np.max(z)) if z.size else 0.0

    @property
    def analytic_is_valid(self) -> bool:
        """Analytic survival lies in [0, 1] and never increases along the grid."""
        s = self.analytic_survival
        return bool(np.all((s >= 0.0) & (s <= 1.0)) and np.all(np.diff(s) <= 0.0))


def _check_grid(lossmap: LossMap, y_grid) -> np.ndarray:
    grid = np.asarray(y_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidGrid("The loss grid must be a nonempty one-dimensional array.")
    floor = max(lossmap.baseline, 0.0)
    bad = grid[~(np.isfinite(grid) & (grid > floor))]
    if bad.size:
        raise InvalidGrid(
            f"Loss levels must be finite and exceed the baseline {lossmap.baseline}; "
            f"got {bad.tolist()}."
        )
    return grid


def check_event_equivalence(
    batch: SampleBatch, spec: BranchSpec, lossmap: LossMap, y_grid
) -> EquivalenceReport:
    """Compare {Y > y} with the matching alpha event at every level of ``y_grid``.

    Bounded branches: {alpha > alpha_c + eta(y)}. Divergent branches:
    {alpha_c < alpha < alpha_c + eta(y)}. Samples whose loss is within 1e-12 * y of y,
    and divergent samples sitting exactly on alpha_c, are counted as boundary-excluded
    instead of being compared.

    Raises
    ------
    InvalidGrid
        if any level is not above the baseline loss
    """
    grid = _check_grid(lossmap, y_grid)
    alphas, values = batch.alphas, batch.losses
    edges = spec.alpha_c + eta_values(spec, lossmap, grid)
    on_threshold = alphas == spec.alpha_c if spec.mode is BranchMode.DIVERGENT else None

    mismatches = np.zeros(grid.size, dtype=np.int64)
    excluded = np.zeros(grid.size, dtype=np.int64)
    violations = np.zeros(grid.size, dtype=np.int64)
    for i, (y, edge) in enumerate(zip(grid, edges)):
        loss_event = values > y
        if spec.mode is BranchMode.BOUNDED:
            alpha_event = alphas > edge
        else:
            alpha_event = (alphas > spec.alpha_c) & (alphas < edge)

        with np.errstate(invalid="ignore"):
            boundary = np.abs(values - y) <= BOUNDARY_REL_BAND * y
        if on_threshold is not None:
            boundary |= on_threshold

        mismatches[i] = np.count_nonzero((loss_event != alpha_event) & ~boundary)
        excluded[i] = np.count_nonzero(boundary)
        violations[i] = np.count_nonzero(loss_event & (alphas < spec.alpha_c))

    return EquivalenceReport(
        y_grid=grid,
        mismatches_per_y=mismatches,
        boundary_excluded_per_y=excluded,
        subset_violations_per_y=violations,
        n=batch.n,
    )


def tail_grid(losses, u: float, size: int) -> np.ndarray:
    """``size`` geometric levels from u up to the 99.99th percentile of the losses."""
    top = float(np.quantile(losses, GRID_TOP_QUANTILE))
    if not top > u:
        raise TooFewExceedances(
            f"The {GRID_TOP_QUANTILE} quantile {top} does not exceed the threshold {u}."
        )
    return np.geomspace(u, top, size)


def check_tail_match(
    batch: SampleBatch,
    spec: BranchSpec,
    lossmap: LossMap,
    dist: AlphaDistribution,
    u_quantile: float = 0.99,
    y_grid_size: int = 20,
    prediction: Optional[TailPrediction] = None,
) -> TailMatchReport:
    """Compare empirical, exact and GPD-fitted survival of the losses above a threshold.

    The threshold u is the ``u_quantile`` empirical quantile of the losses; the grid runs
    geometrically from u to the 99.99th percentile.

    Raises
    ------
    NoHeavyTailRegime
        from ``predict_tail`` when no heavy tail is predicted
    TooFewExceedances
        if fewer than 1000 losses exceed u, or u does not exceed the baseline loss
    """
    if prediction is None:
        prediction = predict_tail(spec, lossmap, dist)
    if not 0.0 < u_quantile < 1.0:
        raise ValueError(f"u_quantile must lie strictly between 0 and 1, got {u_quantile}.")
    if int(y_grid_size) < 2:
        raise ValueError(f"The survival grid needs at least 2 points, got {y_grid_size}.")

    values = batch.losses
    u = float(np.quantile(values, u_quantile))
    exceedances = extract_exceedances(values, u)
    if exceedances.count < MIN_TAIL_EXCEEDANCES:
        raise TooFewExceedances(
            f"Only {exceedances.count} losses exceed u={u}; at least "
            f"{MIN_TAIL_EXCEEDANCES} are needed to check the tail."
        )
    if not u > max(lossmap.baseline, 0.0):
        raise TooFewExceedances(
            f"The {u_quantile} loss quantile {u} does not exceed the baseline "
            f"{lossmap.baseline}; too few samples crossed alpha_c."
        )

    grid = tail_grid(values, u, int(y_grid_size))
    fit = fit_gpd_mle(exceedances)
    xi_predicted = prediction.xi_predicted

    return TailMatchReport(
        y_grid=grid,
        empirical_survival=np.asarray(empirical_survival(values, grid), dtype=float),
        analytic_survival=np.asarray(analytic_survival(spec, lossmap, dist, grid), dtype=float),
        gpd_survival=exceedances.rate * gpd_survival(fit, grid - u),
        xi_fitted=fit.xi,
        xi_predicted=xi_predicted,
        relative_gap=abs(fit.xi - xi_predicted) / max(xi_predicted, XI_GAP_FLOOR),
        u=u,
        u_quantile=float(u_quantile),
        n=batch.n,
        fit=fit,
        prediction=prediction,
        exceedances=exceedances,
    )


def check_survival_band(report: TailMatchReport, band_sigma: float = 3.0) -> int:
    """Count grid points where the empirical survival leaves the band around the exact one."""
    diff = np.abs(report.empirical_survival - report.analytic_survival)
    return int(np.count_nonzero(diff > band_sigma * report.standard_errors))
