"""Run a scenario end to end and write its tables and plot data."""
# pylint: disable=too-many-arguments
# pylint: disable=too-many-locals
import csv
import dataclasses
import math
import warnings
from collections import namedtuple
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from colorama import Fore, Style

from jumptail.config import ScenarioConfig, load_config
from jumptail.evt import (
    DEFAULT_THRESHOLD_QUANTILE,
    MIN_HILL_K,
    GpdFit,
    HillEstimate,
    default_threshold,
    empirical_survival,
    extract_exceedances,
    fit_gpd_mle,
    hill_curve,
    hill_estimator,
    mean_excess_curve,
    try_fit_gpd_pwm,
)
from jumptail.exceptions import (
    ArtifactIoError,
    ConfigValidationError,
    DegenerateTail,
    EmptySample,
    InsufficientPositiveValues,
    TooFewExceedances,
)
from jumptail.jumpmap import TailPrediction, analytic_survival, predict_tail
from jumptail.potentials import equilibrium_branch_diagram, find_equilibria
from jumptail.printing import Outputter, write_csv_table
from jumptail.sampling import SampleBatch, sample_losses
from jumptail.utils import (
    ensure_valid_path_exists,
    ensure_valid_path_with_suffix,
    package_version,
)
from jumptail.verify import (
    EquivalenceReport,
    TailMatchReport,
    check_event_equivalence,
    check_survival_band,
    check_tail_match,
)

Provenance = namedtuple("Provenance", "config_sha256, seed, n_samples, version")
Check = namedtuple("Check", "label, observed, expected, ok")

EXIT_PASSED = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2

MEAN_EXCESS_QUANTILES = np.linspace(0.90, 0.999, 30)
HILL_PLOT_POINTS = 40
BRANCH_DIAGRAM_POINTS = 201

SURVIVAL_HEADERS = ("y", "empirical_survival", "analytic_survival", "gpd_survival")
EXCEEDANCE_HEADERS = ("index", "alpha", "loss", "excess")
FIT_SUMMARY_HEADERS = ("quantity", "value")
EQUIVALENCE_HEADERS = ("y", "mismatches", "boundary_excluded", "subset_violations")
LOGLOG_HEADERS = ("log10_y", "log10_empirical_survival", "log10_analytic_survival")
MEAN_EXCESS_HEADERS = ("u", "mean_excess", "count", "flagged")
HILL_PLOT_HEADERS = ("k", "hill", "tail_index")
BRANCH_DIAGRAM_HEADERS = ("alpha", "x", "kind")


@dataclass(frozen=True)
class RunArtifacts:
    """Everything a run produced.

    ``tail_match`` is None when too few losses exceeded the threshold; ``tail_error``
    then says why, and the exceedance-derived tables are empty.
    """

    config: ScenarioConfig
    batch: SampleBatch
    provenance: Provenance
    prediction: TailPrediction
    y_grid: np.ndarray
    empirical_survival: np.ndarray
    analytic_survival: np.ndarray
    gpd_survival: np.ndarray
    equivalence: EquivalenceReport
    tail_match: Optional[TailMatchReport]
    tail_error: Optional[str]
    pwm_fit: Optional[GpdFit]
    hill: Optional[HillEstimate]
    mean_excess: list
    hill_plot: list
    branch_diagram: list
    band_violations: int
    checks: tuple
    files: tuple = ()

    @property
    def fit(self) -> Optional[GpdFit]:
        return self.tail_match.fit if self.tail_match is not None else None

    @property
    def passed(self) -> bool:
        """True when every verification check succeeded."""
        return all(check.ok for check in self.checks)


def run_scenario(
    config: ScenarioConfig,
    out_dir: Optional[Union[str, Path]] = None,
) -> RunArtifacts:
    """Sample the scenario, run every check, and optionally write artifacts to ``out_dir``.

    Raises
    ------
    NoThresholdMass
        if the alpha law never reaches alpha_c
    NoHeavyTailRegime
        if the branch and alpha law predict no heavy tail
    ArtifactIoError
        if ``out_dir`` cannot be written
    """
    run = config.run
    batch = sample_losses(
        config.alpha_dist, config.branch, config.loss, run.n_samples, run.seed, workers=run.workers
    )
    prediction = predict_tail(config.branch, config.loss, config.alpha_dist)
    provenance = Provenance(config.digest, run.seed, run.n_samples, package_version())

    tail_match, tail_error = None, None
    try:
        tail_match = check_tail_match(
            batch,
            config.branch,
            config.loss,
            config.alpha_dist,
            u_quantile=run.u_quantile,
            y_grid_size=run.y_grid_size,
            prediction=prediction,
        )
    except TooFewExceedances as err:
        tail_error = str(err)
        warnings.warn(f"Tail checks skipped: {err}")

    floor = max(config.loss.baseline, 0.0)
    levels = _loss_levels(batch.losses, floor, run.y_grid_size)
    if tail_match is not None:
        y_grid = tail_match.y_grid
        empirical = tail_match.empirical_survival
        analytic = tail_match.analytic_survival
        gpd = tail_match.gpd_survival
    else:
        y_grid = levels
        empirical, analytic = np.empty(0), np.empty(0)
        if y_grid.size:
            empirical = np.asarray(empirical_survival(batch.losses, y_grid), dtype=float)
            analytic = np.asarray(
                analytic_survival(config.branch, config.loss, config.alpha_dist, y_grid)
            )
        gpd = np.full(y_grid.shape, math.nan)

    equivalence = _equivalence(batch, config, np.union1d(levels, y_grid))

    pwm_fit, hill, mean_excess, hill_plot = None, None, [], []
    if tail_match is not None:
        pwm_fit = try_fit_gpd_pwm(tail_match.exceedances)
        hill = _hill(batch.losses, tail_match.exceedances.count)
        mean_excess = mean_excess_curve(
            batch.losses, np.quantile(batch.losses, MEAN_EXCESS_QUANTILES)
        )
        hill_plot = hill_curve(batch.losses, _hill_ks(batch.losses))

    branch_diagram = []
    if config.potential is not None:
        lo, hi = config.potential.alpha_range
        branch_diagram = equilibrium_branch_diagram(
            config.potential, np.linspace(lo, hi, BRANCH_DIAGRAM_POINTS)
        )

    band_violations = check_survival_band(tail_match, run.band_sigma) if tail_match else 0
    checks = _checks(config, equivalence, tail_match, tail_error, band_violations)

    artifacts = RunArtifacts(
        config=config,
        batch=batch,
        provenance=provenance,
        prediction=prediction,
        y_grid=y_grid,
        empirical_survival=empirical,
        analytic_survival=analytic,
        gpd_survival=gpd,
        equivalence=equivalence,
        tail_match=tail_match,
        tail_error=tail_error,
        pwm_fit=pwm_fit,
        hill=hill,
        mean_excess=mean_excess,
        hill_plot=hill_plot,
        branch_diagram=branch_diagram,
        band_violations=band_violations,
        checks=checks,
    )
    if out_dir is not None:
        files = write_artifacts(artifacts, out_dir) + emit_plot_data(artifacts, out_dir)
        artifacts = dataclasses.replace(artifacts, files=tuple(files))
    return artifacts


def _loss_levels(losses: np.ndarray, floor: float, size: int) -> np.ndarray:
    """Geometric levels spanning the finite losses above ``floor``."""
    above = losses[np.isfinite(losses) & (losses > floor)]
    if above.size == 0:
        return np.empty(0)
    lo, hi = float(np.min(above)), float(np.max(above))
    if not hi > lo:
        return np.array([lo])
    return np.geomspace(lo, hi, size)


def _equivalence(batch: SampleBatch, config: ScenarioConfig, grid: np.ndarray):
    if grid.size == 0:
        empty = np.zeros(0, dtype=np.int64)
        return EquivalenceReport(grid, empty, empty, empty, batch.n)
    return check_event_equivalence(batch, config.branch, config.loss, grid)


def _hill(losses: np.ndarray, k: int) -> Optional[HillEstimate]:
    try:
        return hill_estimator(losses, k)
    except (ValueError, InsufficientPositiveValues, DegenerateTail) as err:
        warnings.warn(f"Hill estimate skipped: {err}")
        return None


def _hill_ks(losses: np.ndarray) -> np.ndarray:
    positives = int(np.count_nonzero(losses > 0.0))
    k_max = min(positives - 1, max(MIN_HILL_K, losses.size // 10))
    if k_max < MIN_HILL_K:
        return np.zeros(0, dtype=np.int64)
    return np.unique(np.round(np.geomspace(MIN_HILL_K, k_max, HILL_PLOT_POINTS)).astype(np.int64))


def _checks(config, equivalence, tail_match, tail_error, band_violations) -> tuple:
    run = config.run
    checks = [
        Check(
            "Event equivalence mismatches",
            int(np.sum(equivalence.mismatches_per_y)),
            0,
            not np.any(equivalence.mismatches_per_y),
        ),
        Check(
            "Losses above y with alpha < alpha_c",
            int(np.sum(equivalence.subset_violations_per_y)),
            0,
            not np.any(equivalence.subset_violations_per_y),
        ),
    ]
    if tail_match is None:
        checks.append(Check("Tail exceedances", tail_error, "enough to fit", False))
        return tuple(checks)

    checks.extend(
        [
            Check(
                "Relative gap in xi",
                tail_match.relative_gap,
                f"<= {run.xi_tolerance}",
                tail_match.relative_gap <= run.xi_tolerance,
            ),
            Check(
                f"Survival outside {run.band_sigma:g} sigma band",
                band_violations,
                0,
                band_violations == 0,
            ),
            Check(
                "Analytic survival in [0,1], nonincreasing",
                tail_match.analytic_is_valid,
                True,
                tail_match.analytic_is_valid,
            ),
        ]
    )
    return tuple(checks)


def _provenance_lines(artifacts: RunArtifacts, table: str) -> list:
    prov = artifacts.provenance
    return [
        ("table", table),
        ("jumptail_version", prov.version),
        ("config_sha256", prov.config_sha256),
        ("seed", prov.seed),
        ("n_samples", prov.n_samples),
    ]


def _prepare_out_dir(out_dir: Union[str, Path]) -> Path:
    path = Path(out_dir)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ArtifactIoError(f"Cannot create output directory {path}: {err}") from err
    return path


def _write(path: Path, headers, rows, provenance) -> Path:
    try:
        return write_csv_table(path, headers, rows, provenance)
    except OSError as err:
        raise ArtifactIoError(f"Cannot write {path}: {err}") from err


def artifact_tables(artifacts: RunArtifacts) -> dict:
    """The four run tables as {name: (headers, rows)}."""
    survival_rows = list(
        zip(
            artifacts.y_grid,
            artifacts.empirical_survival,
            artifacts.analytic_survival,
            artifacts.gpd_survival,
        )
    )

    exceedance_rows = []
    if artifacts.tail_match is not None:
        u = artifacts.tail_match.u
        alphas, losses = artifacts.batch.alphas, artifacts.batch.losses
        exceedance_rows = [
            (int(i), alphas[i], losses[i], losses[i] - u) for i in np.nonzero(losses > u)[0]
        ]

    equivalence = artifacts.equivalence
    equivalence_rows = list(
        zip(
            equivalence.y_grid,
            equivalence.mismatches_per_y,
            equivalence.boundary_excluded_per_y,
            equivalence.subset_violations_per_y,
        )
    )

    return {
        "survival": (SURVIVAL_HEADERS, survival_rows),
        "exceedances": (EXCEEDANCE_HEADERS, exceedance_rows),
        "fit_summary": (FIT_SUMMARY_HEADERS, fit_summary_rows(artifacts)),
        "equivalence": (EQUIVALENCE_HEADERS, equivalence_rows),
    }


def fit_summary_rows(artifacts: RunArtifacts) -> list:
    """Scalar results of a run as (quantity, value) pairs."""
    config = artifacts.config
    rows = [
        ("branch_mode", config.branch.mode),
        ("alpha_c", config.branch.alpha_c),
        ("m", config.branch.m),
        ("C", config.branch.C),
        ("p", config.loss.p),
        ("baseline", config.loss.baseline),
        ("alpha_family", config.alpha_dist.family),
    ]
    if config.branch_exponent is not None:
        rows.append(("branch_exponent_estimate", config.branch_exponent))
    rows.extend(
        [
            ("regime", artifacts.prediction.regime),
            ("xi_predicted", artifacts.prediction.xi_predicted),
        ]
    )

    tail = artifacts.tail_match
    if tail is not None:
        fit = tail.fit
        rows.extend(
            [
                ("u_quantile", tail.u_quantile),
                ("u", tail.u),
                ("n_exceedances", tail.exceedances.count),
                ("xi_mle", fit.xi),
                ("beta_mle", fit.beta),
                ("se_xi_mle", fit.se_xi),
                ("se_beta_mle", fit.se_beta),
                ("log_likelihood_mle", fit.log_likelihood),
                ("relative_gap", tail.relative_gap),
                ("max_standardized_gap", tail.max_standardized_gap),
            ]
        )
        if artifacts.pwm_fit is not None:
            rows.extend(
                [
                    ("xi_pwm", artifacts.pwm_fit.xi),
                    ("beta_pwm", artifacts.pwm_fit.beta),
                    ("log_likelihood_pwm", artifacts.pwm_fit.log_likelihood),
                ]
            )
        if artifacts.hill is not None:
            rows.extend(
                [
                    ("hill_k", artifacts.hill.k),
                    ("hill", artifacts.hill.hill),
                    ("hill_tail_index", artifacts.hill.tail_index),
                ]
            )
    rows.extend(
        [
            ("band_violations", artifacts.band_violations),
            ("passed", artifacts.passed),
        ]
    )
    return rows


def write_artifacts(artifacts: RunArtifacts, out_dir: Union[str, Path]) -> list:
    """Write survival, exceedance, fit-summary and equivalence tables; return their paths.

    Raises
    ------
    ArtifactIoError
    """
    directory = _prepare_out_dir(out_dir)
    return [
        _write(directory / f"{name}.csv", headers, rows, _provenance_lines(artifacts, name))
        for name, (headers, rows) in artifact_tables(artifacts).items()
    ]


def plot_tables(artifacts: RunArtifacts) -> dict:
    """The four plot-data tables as {name: (headers, rows)}."""
    with np.errstate(divide="ignore"):
        loglog_rows = list(
            zip(
                np.log10(artifacts.y_grid),
                np.log10(artifacts.empirical_survival),
                np.log10(artifacts.analytic_survival),
            )
        )
    mean_excess_rows = [tuple(point) for point in artifacts.mean_excess]
    hill_rows = [(h.k, h.hill, h.tail_index) for h in artifacts.hill_plot]
    return {
        "survival_loglog": (LOGLOG_HEADERS, loglog_rows),
        "mean_excess": (MEAN_EXCESS_HEADERS, mean_excess_rows),
        "hill_plot": (HILL_PLOT_HEADERS, hill_rows),
        "branch_diagram": (BRANCH_DIAGRAM_HEADERS, list(artifacts.branch_diagram)),
    }


def emit_plot_data(artifacts: RunArtifacts, out_dir: Union[str, Path]) -> list:
    """Write log-log survival, mean-excess, Hill-plot and branch-diagram data; return their paths.

    Raises
    ------
    ArtifactIoError
        if the directory or a file cannot be written
    """
    directory = _prepare_out_dir(out_dir)
    return [
        _write(directory / f"{name}.csv", headers, rows, _provenance_lines(artifacts, name))
        for name, (headers, rows) in plot_tables(artifacts).items()
    ]


def simulate(
    config_path: Union[str, Path],
    out_dir: Union[str, Path],
    seed: Optional[int] = None,
    n_samples: Optional[int] = None,
    workers: Optional[int] = None,
    no_color: bool = False,
    file_text: Union[str, Path] = "",
    file_csv: Union[str, Path] = "",
    file_xlsx: Union[str, Path] = "",
) -> int:
    """Run a scenario file and report every check.

    Parameters
    ----------
    config_path : str
        filepath to a JSON scenario
    out_dir : str
        directory that receives the tables and plot data
    seed, n_samples, workers : int, optional
        override the corresponding values of the scenario's run block
    no_color : bool, default False
        Turns off the use of ANSI escape character sequences for producing colored terminal text
    file_text : str
        filepath destination to save captured text output as a TXT file.
    file_csv : str
        filepath destination to save the check report as comma-separated values (CSV).
    file_xlsx : str
        filepath destination to save the report and every table as an Excel workbook.

    Returns
    -------
    int
        EXIT_PASSED if all checks passed, EXIT_CHECK_FAILED otherwise
    """
    config_path = ensure_valid_path_exists(config_path)
    if file_text:
        file_text = ensure_valid_path_with_suffix(file_text, ".txt")
    if file_csv:
        file_csv = ensure_valid_path_with_suffix(file_csv, ".csv")
    if file_xlsx:
        file_xlsx = ensure_valid_path_with_suffix(file_xlsx, ".xlsx")

    config = load_config(config_path, seed=seed, n_samples=n_samples, workers=workers)

    with Outputter(keep_print_history=True, no_color=no_color, text_file=file_text) as out:
        out.print(f"Scenario: {config_path}")
        out.print(f"Config SHA-256: {config.digest}")
        out.print(
            f"Samples: {config.run.n_samples}   seed: {config.run.seed}   "
            f"workers: {config.run.workers}"
        )

        artifacts = run_scenario(config, out_dir=out_dir)
        report_artifacts(out, artifacts)

        if file_csv:
            out.write_history_to_csv(filename=file_csv)
        if file_xlsx:
            tables = {**artifact_tables(artifacts), **plot_tables(artifacts)}
            out.write_history_to_excel(filename=file_xlsx, tables=tables)

        out.print(f"\nWrote {len(artifacts.files)} files to {out_dir}", colors=False)
        if artifacts.passed:
            out.print(Fore.GREEN + "All checks passed.")
            return EXIT_PASSED
        out.print(Fore.RED + Style.BRIGHT + f"{out.failures} check(s) failed.")
        return EXIT_CHECK_FAILED


def report_artifacts(out: Outputter, artifacts: RunArtifacts) -> None:
    """Print the tail estimates and the verification checks of a run."""
    config = artifacts.config
    out.header("\nScenario")
    out.side_by_side("Branch", config.branch.mode.value, f"m = {config.branch.m:.6g}")
    out.side_by_side("alpha_c", f"{config.branch.alpha_c:.6g}", "")
    if config.branch_exponent is not None:
        out.side_by_side("Branch exponent estimate", f"{config.branch_exponent:.6g}", "")
    out.side_by_side("Tail regime", artifacts.prediction.regime.value, "")

    tail = artifacts.tail_match
    if tail is not None:
        out.header("\nTail estimates")
        out.side_by_side(" ", "Observed", "Predicted", dash_line=False)
        out.side_by_side("GPD shape xi (MLE)", f"{tail.xi_fitted:.6g}", f"{tail.xi_predicted:.6g}")
        out.side_by_side("  standard error", f"{tail.fit.se_xi:.3g}", "")
        if artifacts.pwm_fit is not None:
            out.side_by_side("GPD shape xi (PWM)", f"{artifacts.pwm_fit.xi:.6g}", "")
        if artifacts.hill is not None:
            out.side_by_side(
                f"Hill tail index (k={artifacts.hill.k})",
                f"{artifacts.hill.tail_index:.6g}",
                f"{tail.prediction.tail_index:.6g}",
            )
        out.side_by_side("Threshold u", f"{tail.u:.6g}", f"q = {tail.u_quantile:g}")

    out.header("\nChecks")
    out.side_by_side(" ", "Observed", "Expected", dash_line=False)
    for check in artifacts.checks:
        out.check(check.label, check.observed, check.expected, check.ok)


def tabulate_equilibria(
    config_path: Union[str, Path],
    alphas: np.ndarray,
    no_color: bool = False,
    file_csv: Union[str, Path] = "",
) -> int:
    """Print the classified equilibria of the scenario's potential over an alpha grid."""
    config_path = ensure_valid_path_exists(config_path)
    if file_csv:
        file_csv = ensure_valid_path_with_suffix(file_csv, ".csv")
    config = load_config(config_path)
    if config.potential is None:
        raise ConfigValidationError(["potential: the equilibria command needs a potential"])

    with Outputter(no_color=no_color) as out:
        out.print(f"Potential: {config.potential.form.value}  degree {config.potential.degree}")
        if config.critical_threshold is not None:
            out.print(f"Critical threshold alpha_c = {config.critical_threshold.alpha_c:.12g}")
        if config.branch_exponent is not None:
            out.print(
                f"Branch exponent estimate ({config.crossing.value} alpha_c) "
                f"= {config.branch_exponent:.6g}"
            )
        out.side_by_side("alpha", "x*", "kind")
        rows = []
        for alpha in np.asarray(alphas, dtype=float):
            eq_set = find_equilibria(config.potential, float(alpha))
            if not eq_set.equilibria:
                out.side_by_side(f"{alpha:.6g}", "-", "none")
            for eq in eq_set.equilibria:
                rows.append((float(alpha), eq.location, eq.kind))
                out.side_by_side(f"{alpha:.6g}", f"{eq.location:.10g}", eq.kind.value)

        if file_csv:
            write_csv_table(
                file_csv,
                BRANCH_DIAGRAM_HEADERS,
                rows,
                [("table", "branch_diagram"), ("jumptail_version", package_version())],
            )
            out.print(f"\nWrote {file_csv}", colors=False)
    return EXIT_PASSED


def read_losses(path: Union[str, Path]) -> np.ndarray:
    """Read losses from a CSV file.

    Lines starting with ``#`` are skipped. When the first row is a header, the ``loss``
    column is used if there is one and the first column otherwise.
    """
    path = ensure_valid_path_exists(path)
    with open(path, encoding="utf-8", newline="") as source:
        rows = [row for row in csv.reader(line for line in source if not line.startswith("#"))]
    rows = [row for row in rows if row]
    if not rows:
        raise EmptySample(f"No losses found in {path}.")

    column = 0
    try:
        float(rows[0][0])
    except ValueError:
        header = [cell.strip() for cell in rows[0]]
        column = header.index("loss") if "loss" in header else 0
        rows = rows[1:]

    values = []
    for line_number, row in enumerate(rows, start=1):
        try:
            values.append(float(row[column]))
        except (ValueError, IndexError) as err:
            raise ValueError(f"{path}: data row {line_number} has no numeric loss: {row}") from err
    if not values:
        raise EmptySample(f"No losses found in {path}.")
    return np.array(values, dtype=float)


def fit_losses(
    csv_path: Union[str, Path],
    u_quantile: Optional[float] = None,
    no_color: bool = False,
) -> int:
    """Fit the tail of a column of losses above its ``u_quantile`` empirical quantile.

    Without ``u_quantile`` the threshold is the default POT quantile of ``evt``.
    """
    if u_quantile is None:
        u_quantile = DEFAULT_THRESHOLD_QUANTILE
    if not 0.0 < u_quantile < 1.0:
        raise ValueError(f"u_quantile must lie strictly between 0 and 1, got {u_quantile}.")
    losses = read_losses(csv_path)
    u = default_threshold(losses, u_quantile)
    exceedances = extract_exceedances(losses, u)
    fit = fit_gpd_mle(exceedances)

    with Outputter(no_color=no_color) as out:
        out.print(f"Losses: {csv_path}  (n = {losses.size})")
        out.side_by_side(" ", "Estimate", "Std. error")
        out.side_by_side("Threshold u", f"{u:.10g}", f"q = {u_quantile:g}")
        out.side_by_side("Exceedances", str(exceedances.count), "")
        out.side_by_side("GPD shape xi (MLE)", f"{fit.xi:.6g}", f"{fit.se_xi:.3g}")
        out.side_by_side("GPD scale beta (MLE)", f"{fit.beta:.6g}", f"{fit.se_beta:.3g}")
        out.side_by_side("Log-likelihood (MLE)", f"{fit.log_likelihood:.10g}", "")

        pwm = try_fit_gpd_pwm(exceedances)
        if pwm is not None:
            out.side_by_side("GPD shape xi (PWM)", f"{pwm.xi:.6g}", "")
            out.side_by_side("GPD scale beta (PWM)", f"{pwm.beta:.6g}", "")

        hill = _hill(losses, exceedances.count)
        if hill is not None:
            out.side_by_side(f"Hill tail index (k={hill.k})", f"{hill.tail_index:.6g}", "")
    return EXIT_PASSED

