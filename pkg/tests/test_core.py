import csv
import json

import numpy as np
import pytest

from jumptail.config import load_config
from jumptail.core import (
    BRANCH_DIAGRAM_HEADERS,
    SURVIVAL_HEADERS,
    fit_losses,
    read_losses,
    run_scenario,
    tabulate_equilibria,
)
from jumptail.exceptions import (
    ArtifactIoError,
    ConfigValidationError,
    EmptySample,
    NoThresholdMass,
)
from jumptail.potentials import StabilityKind

from . import data_for_tests_dir, gpd_sample

ARTIFACT_NAMES = [
    "survival",
    "exceedances",
    "fit_summary",
    "equivalence",
    "survival_loglog",
    "mean_excess",
    "hill_plot",
    "branch_diagram",
]


def _read_table(path):
    """Return (provenance dict, header, rows) of a table written by a run."""
    provenance, lines = {}, []
    with open(path, encoding="utf-8", newline="") as source:
        for line in source:
            if line.startswith("# "):
                key, value = line[2:].rstrip("\n").split(": ", 1)
                provenance[key] = value
            else:
                lines.append(line)
    rows = list(csv.reader(lines))
    return provenance, rows[0], rows[1:]


@pytest.fixture(scope="module")
def smaller_scenario_a(scenario_a_path):
    return load_config(scenario_a_path, n_samples=200_000)


@pytest.fixture(scope="module")
def written_run(smaller_scenario_a, tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("run")
    return out_dir, run_scenario(smaller_scenario_a, out_dir=out_dir)


@pytest.mark.slow
def test_scenario_a_passes_every_check(scenario_a_artifacts):
    artifacts = scenario_a_artifacts

    assert artifacts.passed
    assert artifacts.band_violations == 0
    assert artifacts.tail_error is None
    assert artifacts.fit.xi == pytest.approx(1.0, abs=0.1)
    assert artifacts.pwm_fit is not None


@pytest.mark.slow
def test_scenario_a_hill_estimate(scenario_a_artifacts):
    hill = scenario_a_artifacts.hill
    assert hill.k == scenario_a_artifacts.tail_match.exceedances.count
    assert hill.tail_index == pytest.approx(1.0, abs=0.05)


@pytest.mark.slow
def test_scenario_b_passes_every_check(scenario_b_artifacts):
    artifacts = scenario_b_artifacts

    assert artifacts.passed
    assert artifacts.fit.xi == pytest.approx(0.5, abs=0.05)
    assert artifacts.hill.tail_index == pytest.approx(2.0, abs=0.1)


@pytest.mark.slow
def test_branch_diagram_covers_the_potential_range(scenario_a_artifacts):
    diagram = scenario_a_artifacts.branch_diagram
    alphas = [row[0] for row in diagram]

    assert min(alphas) >= 0.0
    assert max(alphas) == 1.0
    assert {row[2] for row in diagram} >= {StabilityKind.STABLE, StabilityKind.UNSTABLE}


def test_every_artifact_is_written(written_run):
    out_dir, artifacts = written_run

    assert sorted(p.name for p in artifacts.files) == sorted(f"{n}.csv" for n in ARTIFACT_NAMES)
    for name in ARTIFACT_NAMES:
        assert (out_dir / f"{name}.csv").exists()


def test_tables_carry_provenance(written_run, smaller_scenario_a):
    out_dir, _ = written_run
    for name in ARTIFACT_NAMES:
        provenance, _, _ = _read_table(out_dir / f"{name}.csv")

        assert provenance["table"] == name
        assert provenance["config_sha256"] == smaller_scenario_a.digest
        assert provenance["seed"] == "20240607"
        assert provenance["n_samples"] == "200000"
        assert "jumptail_version" in provenance


def test_survival_table_reads_back_exactly(written_run):
    out_dir, artifacts = written_run
    _, header, rows = _read_table(out_dir / "survival.csv")

    assert tuple(header) == SURVIVAL_HEADERS
    assert np.array([float(r[0]) for r in rows]).tobytes() == artifacts.y_grid.tobytes()
    assert [float(r[1]) for r in rows] == artifacts.empirical_survival.tolist()


def test_exceedance_table_lists_every_exceedance(written_run):
    out_dir, artifacts = written_run
    _, header, rows = _read_table(out_dir / "exceedances.csv")

    assert header == ["index", "alpha", "loss", "excess"]
    assert len(rows) == artifacts.tail_match.exceedances.count
    indices = [int(r[0]) for r in rows]
    assert indices == sorted(indices)
    assert all(float(r[3]) > 0.0 for r in rows)


def test_fit_summary_values(written_run):
    out_dir, artifacts = written_run
    _, _, rows = _read_table(out_dir / "fit_summary.csv")
    summary = dict(rows)

    assert summary["branch_mode"] == "divergent"
    assert summary["regime"] == "fluctuation_driven"
    assert float(summary["xi_mle"]) == artifacts.fit.xi
    assert summary["passed"] == str(artifacts.passed).lower()


def test_output_is_independent_of_worker_count(scenario_a_path, tmp_path_factory):
    serial_dir = tmp_path_factory.mktemp("serial")
    parallel_dir = tmp_path_factory.mktemp("parallel")
    serial = run_scenario(
        load_config(scenario_a_path, n_samples=200_000, workers=1), out_dir=serial_dir
    )
    parallel = run_scenario(
        load_config(scenario_a_path, n_samples=200_000, workers=8), out_dir=parallel_dir
    )

    assert serial.batch == parallel.batch
    for name in ARTIFACT_NAMES:
        serial_bytes = (serial_dir / f"{name}.csv").read_bytes()
        assert serial_bytes == (parallel_dir / f"{name}.csv").read_bytes(), name


def test_too_few_exceedances_fails_the_run(scenario_a_path, tmp_path):
    config = load_config(scenario_a_path, n_samples=5000)
    with pytest.warns(UserWarning, match="Tail checks skipped"):
        artifacts = run_scenario(config, out_dir=tmp_path)

    assert not artifacts.passed
    assert artifacts.tail_match is None
    assert artifacts.fit is None
    assert "exceed" in artifacts.tail_error
    assert artifacts.checks[-1].ok is False

    _, header, rows = _read_table(tmp_path / "exceedances.csv")
    assert header == ["index", "alpha", "loss", "excess"]
    assert rows == []
    _, _, survival_rows = _read_table(tmp_path / "survival.csv")
    assert survival_rows
    assert all(r[3] == "nan" for r in survival_rows)


def test_unreachable_threshold(unreachable_path):
    with pytest.raises(NoThresholdMass):
        run_scenario(load_config(unreachable_path))


def test_output_directory_that_is_a_file(scenario_a_path, tmp_path):
    blocker = tmp_path / "not_a_directory"
    blocker.write_text("occupied", encoding="utf-8")
    config = load_config(scenario_a_path, n_samples=100_000)
    with pytest.raises(ArtifactIoError):
        run_scenario(config, out_dir=blocker)


def test_tabulate_equilibria(scenario_a_path, tmp_path, capsys):
    out_csv = tmp_path / "equilibria.csv"
    status = tabulate_equilibria(
        scenario_a_path, np.array([-1.0, 0.0, 3.0]), no_color=True, file_csv=out_csv
    )

    assert status == 0
    captured = capsys.readouterr().out
    assert "none" in captured
    assert "stable" in captured

    _, header, rows = _read_table(out_csv)
    assert tuple(header) == BRANCH_DIAGRAM_HEADERS
    assert [r[2] for r in rows] == ["degenerate", "unstable", "stable"]


def test_tabulate_equilibria_needs_a_potential(scenario_a_path, tmp_path):
    raw = json.loads(scenario_a_path.read_text(encoding="utf-8"))
    raw["potential"] = None
    scenario = tmp_path / "no_potential.json"
    scenario.write_text(json.dumps(raw), encoding="utf-8")
    with pytest.raises(ConfigValidationError):
        tabulate_equilibria(scenario, np.array([0.0]))


def test_read_losses_uses_loss_column(tmp_path):
    path = tmp_path / "table.csv"
    path.write_text("# table: exceedances\nindex,alpha,loss\n0,0.1,2.5\n7,0.3,4.0\n")
    assert read_losses(path).tolist() == [2.5, 4.0]


def test_read_losses_without_header(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("1.5\n2.5\n\n3.5\n")
    assert read_losses(path).tolist() == [1.5, 2.5, 3.5]


def test_read_losses_from_header_only_file():
    with pytest.raises(EmptySample):
        read_losses(data_for_tests_dir / "losses.csv")


def test_read_losses_rejects_text_values(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("loss\n1.0\nlots\n")
    with pytest.raises(ValueError):
        read_losses(path)


def test_fit_losses(tmp_path, capsys):
    path = tmp_path / "gpd.csv"
    sample = gpd_sample(0.5, 1.0, n=20_000, seed=13)
    path.write_text("loss\n" + "\n".join(repr(float(v)) for v in sample) + "\n")

    assert fit_losses(path, 0.9, no_color=True) == 0
    captured = capsys.readouterr().out
    assert "GPD shape xi (MLE)" in captured
    assert "Hill tail index (k=2000)" in captured


def test_fit_losses_defaults_to_the_95th_percentile(tmp_path, capsys):
    path = tmp_path / "gpd.csv"
    sample = gpd_sample(0.5, 1.0, n=20_000, seed=13)
    path.write_text("loss\n" + "\n".join(repr(float(v)) for v in sample) + "\n")

    assert fit_losses(path, no_color=True) == 0
    captured = capsys.readouterr().out
    assert "q = 0.95" in captured
    assert "Hill tail index (k=1000)" in captured


def test_fit_losses_rejects_bad_quantile(tmp_path):
    with pytest.raises(ValueError):
        fit_losses(tmp_path / "unused.csv", 1.5)
