from pathlib import Path

import pytest

from jumptail.config import load_config
from jumptail.core import run_scenario
from jumptail.jumpmap import BranchSpec, LossMap
from jumptail.potentials import PotentialForm, PotentialModel
from jumptail.printing import Outputter
from jumptail.sampling import AlphaDistribution, sample_losses

from . import data_for_tests_dir


@pytest.fixture(scope="session")
def temp_data_dir(tmpdir_factory) -> Path:
    return Path(tmpdir_factory.mktemp('data'))


@pytest.fixture(scope="function")
def outputter_to_console():
    return Outputter()


@pytest.fixture(scope="session")
def temp_test_text_file_path(temp_data_dir):
    return Path(temp_data_dir) / "temp_test_text_file_output.txt"


@pytest.fixture(scope="function")
def outputter_to_text_file(temp_test_text_file_path):
    return Outputter(keep_print_history=True, text_file=temp_test_text_file_path.resolve())


@pytest.fixture(scope="session")
def fold() -> PotentialModel:
    return PotentialModel(PotentialForm.FOLD)


@pytest.fixture(scope="session")
def cusp_fold_line() -> PotentialModel:
    # a = -1, b = alpha: the fold line is crossed at alpha = 2 / (3 sqrt 3)
    return PotentialModel(PotentialForm.CUSP, (-1.0, 0.0, 0.0, 1.0), alpha_range=(0.0, 1.0))


@pytest.fixture(scope="session")
def scenario_a_path() -> Path:
    return data_for_tests_dir / "scenario_a.json"


@pytest.fixture(scope="session")
def scenario_b_path() -> Path:
    return data_for_tests_dir / "scenario_b.json"


@pytest.fixture(scope="session")
def cusp_auto_path() -> Path:
    return data_for_tests_dir / "cusp_auto.json"


@pytest.fixture(scope="session")
def unreachable_path() -> Path:
    return data_for_tests_dir / "unreachable_threshold.json"


@pytest.fixture(scope="session")
def scenario_a(scenario_a_path):
    """Divergent m=1/2, p=2, alpha ~ Uniform(0, 1): Pr(Y > y) = 1/y for y >= 1."""
    return load_config(scenario_a_path)


@pytest.fixture(scope="session")
def scenario_b(scenario_b_path):
    """Bounded m=1/2, p=2, alpha ~ Pareto(tail index 2): Pr(Y > y) = y^-2 for y >= 1."""
    return load_config(scenario_b_path)


@pytest.fixture(scope="session")
def scenario_a_artifacts(scenario_a):
    return run_scenario(scenario_a)


@pytest.fixture(scope="session")
def scenario_b_artifacts(scenario_b):
    return run_scenario(scenario_b)


@pytest.fixture(scope="session")
def small_divergent_batch():
    spec = BranchSpec("divergent", m=0.5, C=1.0, alpha_c=0.25)
    lossmap = LossMap(p=2.0, baseline=0.5)
    dist = AlphaDistribution.uniform(-0.5, 1.0)
    return spec, lossmap, dist, sample_losses(dist, spec, lossmap, n=50_000, seed=11)
