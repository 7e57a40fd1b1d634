"""Scenario configuration: JSON on disk, validated into the objects each module works with.

A scenario file has exactly five top-level blocks::

    {
      "potential":  {"form": "fold", "coefficients": [], "alpha_range": [-1, 1],
                     "crossing": "above"},
      "branch":     {"mode": "divergent", "m": 0.5, "C": 1, "alpha_c": 0},
      "loss":       {"p": 2, "baseline": 0},
      "alpha_dist": {"family": "uniform", "parameters": {"lo": 0, "hi": 1}},
      "run":        {"n_samples": 1000000, "seed": 7}
    }

``potential`` may be null, in which case neither ``alpha_c`` nor ``m`` may be "auto".
Every problem found is collected and reported together.
"""
import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from jumptail.exceptions import ConfigParseError, ConfigValidationError, JumptailError
from jumptail.jumpmap import BranchSpec, LossMap
from jumptail.potentials import (
    CriticalThreshold,
    PotentialModel,
    Side,
    branch_exponent_estimate,
    find_critical_threshold,
)
from jumptail.sampling import MAX_SEED, AlphaDistribution
from jumptail.utils import config_digest, ensure_valid_path_exists

TOP_LEVEL_KEYS = ("potential", "branch", "loss", "alpha_dist", "run")
AUTO = "auto"
EXPONENT_AGREEMENT = 0.05

_MISSING = object()


@dataclass(frozen=True)
class RunConfig:
    """Sampling and verification knobs of one run."""

    n_samples: int
    seed: int
    u_quantile: float = 0.99
    y_grid_size: int = 20
    workers: int = 1
    band_sigma: float = 3.0
    xi_tolerance: float = 0.25


@dataclass(frozen=True)
class ScenarioConfig:
    """A fully validated scenario.

    ``critical_threshold`` and ``branch_exponent`` hold what was derived from the
    potential, when there is one. ``digest`` identifies the scenario content and does
    not depend on the worker count.
    """

    potential: Optional[PotentialModel]
    crossing: Side
    branch: BranchSpec
    loss: LossMap
    alpha_dist: AlphaDistribution
    run: RunConfig
    critical_threshold: Optional[CriticalThreshold]
    branch_exponent: Optional[float]
    raw: dict
    digest: str


class _Collector:
    """Reads fields out of nested dicts, recording failures instead of raising."""

    def __init__(self):
        self.failures = []

    def fail(self, path: str, message: str):
        self.failures.append(f"{path}: {message}")

    def block(self, raw: dict, name: str, allowed: tuple) -> Optional[dict]:
        value = raw.get(name, _MISSING)
        if value is _MISSING:
            return None
        if not isinstance(value, dict):
            self.fail(name, f"must be an object, got {type(value).__name__}")
            return None
        for key in value:
            if key not in allowed:
                self.fail(f"{name}.{key}", f"unknown field; allowed fields are {list(allowed)}")
        return value

    def number(self, block: dict, path: str, default=_MISSING, allow_auto: bool = False):
        key = path.rsplit(".", 1)[-1]
        value = block.get(key, default)
        if value is _MISSING:
            self.fail(path, "required field is missing")
            return None
        if allow_auto and value == AUTO:
            return AUTO
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            expected = f'a number or "{AUTO}"' if allow_auto else "a number"
            self.fail(path, f"must be {expected}, got {value!r}")
            return None
        if not math.isfinite(value):
            self.fail(path, f"must be finite, got {value!r}")
            return None
        return value

    def integer(self, block: dict, path: str, default=_MISSING, minimum: int = 0):
        key = path.rsplit(".", 1)[-1]
        value = block.get(key, default)
        if value is _MISSING:
            self.fail(path, "required field is missing")
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(path, f"must be an integer, got {value!r}")
            return None
        if value < minimum:
            self.fail(path, f"must be at least {minimum}, got {value}")
            return None
        return value

    def string(self, block: dict, path: str, default=_MISSING):
        key = path.rsplit(".", 1)[-1]
        value = block.get(key, default)
        if value is _MISSING:
            self.fail(path, "required field is missing")
            return None
        if not isinstance(value, str):
            self.fail(path, f"must be a string, got {value!r}")
            return None
        return value

    def build(self, path: str, factory, *args):
        """Call a module constructor, turning its validation error into a failure."""
        try:
            return factory(*args)
        except (JumptailError, ValueError, TypeError) as err:
            self.fail(path, str(err))
            return None


def load_config(
    path: Union[str, Path],
    seed: Optional[int] = None,
    n_samples: Optional[int] = None,
    workers: Optional[int] = None,
) -> ScenarioConfig:
    """Read and validate a scenario file; keyword values override the file's run block.

    Raises
    ------
    FileNotFoundError
    ConfigParseError
        if the file is not valid JSON
    ConfigValidationError
        listing every validation failure
    """
    config_path = ensure_valid_path_exists(path)
    try:
        raw = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ConfigParseError(f"{config_path}: not valid JSON ({err}).") from err
    except UnicodeDecodeError as err:
        raise ConfigParseError(f"{config_path}: not UTF-8 text ({err}).") from err
    return config_from_dict(raw, seed=seed, n_samples=n_samples, workers=workers)


def config_from_dict(
    raw,
    seed: Optional[int] = None,
    n_samples: Optional[int] = None,
    workers: Optional[int] = None,
) -> ScenarioConfig:
    """Validate an already-parsed scenario mapping (see ``load_config``)."""
    if not isinstance(raw, dict):
        raise ConfigValidationError([f"<root>: must be an object, got {type(raw).__name__}"])
    raw = copy.deepcopy(raw)
    if isinstance(raw.get("run"), dict):
        for key, value in (("seed", seed), ("n_samples", n_samples), ("workers", workers)):
            if value is not None:
                raw["run"][key] = value

    check = _Collector()
    for key in TOP_LEVEL_KEYS:
        if key not in raw:
            check.fail(key, "required top-level block is missing")
    for key in raw:
        if key not in TOP_LEVEL_KEYS:
            check.fail(key, f"unknown top-level block; expected exactly {list(TOP_LEVEL_KEYS)}")

    model, crossing = _potential(check, raw)
    lossmap = _loss(check, raw)
    alpha_dist = _alpha_dist(check, raw)
    run = _run(check, raw)
    branch, threshold, estimate = _branch(check, raw, model, crossing)

    if check.failures:
        raise ConfigValidationError(check.failures)

    return ScenarioConfig(
        potential=model,
        crossing=crossing,
        branch=branch,
        loss=lossmap,
        alpha_dist=alpha_dist,
        run=run,
        critical_threshold=threshold,
        branch_exponent=estimate,
        raw=raw,
        digest=config_digest(_without_workers(raw)),
    )


def _without_workers(raw: dict) -> dict:
    content = copy.deepcopy(raw)
    content["run"].pop("workers", None)
    return content


def _potential(check: _Collector, raw: dict) -> tuple:
    if raw.get("potential", _MISSING) is None:
        return None, Side.ABOVE
    block = check.block(raw, "potential", ("form", "coefficients", "alpha_range", "crossing"))
    if block is None:
        return None, Side.ABOVE

    crossing = Side.ABOVE
    crossing_name = check.string(block, "potential.crossing", default=Side.ABOVE.value)
    if crossing_name is not None:
        try:
            crossing = Side(crossing_name)
        except ValueError:
            check.fail("potential.crossing", f'must be "above" or "below", got {crossing_name!r}')

    form = check.string(block, "potential.form")
    coefficients = block.get("coefficients", [])
    alpha_range = block.get("alpha_range", [-1.0, 1.0])
    if not _is_number_list(coefficients):
        check.fail("potential.coefficients", f"must be a list of numbers, got {coefficients!r}")
        return None, crossing
    if not (_is_number_list(alpha_range) and len(alpha_range) == 2):
        check.fail("potential.alpha_range", f"must be a pair of numbers, got {alpha_range!r}")
        return None, crossing
    if form is None:
        return None, crossing
    model = check.build(
        "potential", PotentialModel, form, tuple(coefficients), tuple(alpha_range)
    )
    return model, crossing


def _is_number_list(value) -> bool:
    return isinstance(value, list) and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    )


def _loss(check: _Collector, raw: dict) -> Optional[LossMap]:
    block = check.block(raw, "loss", ("p", "baseline"))
    if block is None:
        return None
    p = check.number(block, "loss.p")
    baseline = check.number(block, "loss.baseline", default=0.0)
    if p is None or baseline is None:
        return None
    return check.build("loss", LossMap, p, baseline)


def _alpha_dist(check: _Collector, raw: dict) -> Optional[AlphaDistribution]:
    block = check.block(raw, "alpha_dist", ("family", "parameters"))
    if block is None:
        return None
    family = check.string(block, "alpha_dist.family")
    parameters = block.get("parameters", _MISSING)
    if parameters is _MISSING:
        check.fail("alpha_dist.parameters", "required field is missing")
        return None
    if not isinstance(parameters, dict):
        check.fail("alpha_dist.parameters", f"must be an object, got {parameters!r}")
        return None
    if family is None:
        return None
    return check.build("alpha_dist", AlphaDistribution.from_parameters, family, parameters)


def _run(check: _Collector, raw: dict) -> Optional[RunConfig]:
    block = check.block(
        raw,
        "run",
        (
            "n_samples",
            "seed",
            "u_quantile",
            "y_grid_size",
            "workers",
            "band_sigma",
            "xi_tolerance",
        ),
    )
    if block is None:
        return None
    n_samples = check.integer(block, "run.n_samples", minimum=1)
    seed = check.integer(block, "run.seed", minimum=0)
    if seed is not None and seed >= MAX_SEED:
        check.fail("run.seed", f"must be below 2**64, got {seed}")
        seed = None
    u_quantile = check.number(block, "run.u_quantile", default=RunConfig.u_quantile)
    if u_quantile is not None and not 0.0 < u_quantile < 1.0:
        check.fail("run.u_quantile", f"must lie strictly between 0 and 1, got {u_quantile}")
        u_quantile = None
    y_grid_size = check.integer(block, "run.y_grid_size", default=RunConfig.y_grid_size, minimum=2)
    workers = check.integer(block, "run.workers", default=RunConfig.workers, minimum=1)
    band_sigma = check.number(block, "run.band_sigma", default=RunConfig.band_sigma)
    if band_sigma is not None and not band_sigma > 0.0:
        check.fail("run.band_sigma", f"must be positive, got {band_sigma}")
        band_sigma = None
    xi_tolerance = check.number(block, "run.xi_tolerance", default=RunConfig.xi_tolerance)
    if xi_tolerance is not None and not xi_tolerance > 0.0:
        check.fail("run.xi_tolerance", f"must be positive, got {xi_tolerance}")
        xi_tolerance = None

    values = (n_samples, seed, u_quantile, y_grid_size, workers, band_sigma, xi_tolerance)
    if any(v is None for v in values):
        return None
    return RunConfig(
        n_samples=n_samples,
        seed=seed,
        u_quantile=float(u_quantile),
        y_grid_size=y_grid_size,
        workers=workers,
        band_sigma=float(band_sigma),
        xi_tolerance=float(xi_tolerance),
    )


def _branch(
    check: _Collector, raw: dict, model: Optional[PotentialModel], crossing: Side
) -> tuple:
    block = check.block(raw, "branch", ("mode", "m", "C", "alpha_c"))
    if block is None:
        return None, None, None
    mode = check.string(block, "branch.mode")
    m = check.number(block, "branch.m", allow_auto=True)
    amplitude = check.number(block, "branch.C", default=1.0)
    alpha_c = check.number(block, "branch.alpha_c", allow_auto=True)
    potential_ok = raw.get("potential") is None or model is not None

    threshold = None
    if alpha_c == AUTO:
        if model is None:
            if potential_ok:
                check.fail("branch.alpha_c", '"auto" needs a potential to locate the transition')
            alpha_c = None
        else:
            threshold = check.build("branch.alpha_c", find_critical_threshold, model)
            alpha_c = threshold.alpha_c if threshold is not None else None

    estimate = None
    if model is not None and alpha_c is not None and m is not None:
        estimate = check.build(
            "branch.m", branch_exponent_estimate, model, float(alpha_c), crossing
        )
        if estimate is not None and m != AUTO and abs(m - estimate) > EXPONENT_AGREEMENT:
            check.fail(
                "branch.m",
                f"declared exponent {m} disagrees with the potential's branch exponent "
                f"estimate {estimate:.4f} ({crossing.value} alpha_c={alpha_c}) by more "
                f"than {EXPONENT_AGREEMENT}",
            )
    if m == AUTO:
        if model is None and potential_ok:
            check.fail("branch.m", '"auto" needs a potential to estimate the exponent')
        m = estimate

    if mode is None or m is None or amplitude is None or alpha_c is None:
        return None, threshold, estimate
    spec = check.build("branch", BranchSpec, mode, m, amplitude, alpha_c)
    return spec, threshold, estimate
