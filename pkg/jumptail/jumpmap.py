"""The post-crossing branch, the loss map and the tail exponent they imply.

A crossing of alpha_c moves the system onto the branch

    Divergent:  x~(alpha) = C * (alpha - alpha_c)^(-m)
    Bounded:    x~(alpha) = C * (alpha - alpha_c)^(+m)

and the loss is Y = g(x~) = |x~|^p above the threshold, ``baseline`` below it.
``eta`` inverts this map exactly, so {Y > y} is an event about alpha alone.
"""
# pylint: disable=invalid-name
import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Union

import numpy as np

from jumptail.exceptions import BelowThreshold, NoHeavyTailRegime, NotInvertible

if TYPE_CHECKING:  # pragma: no cover
    from jumptail.sampling import AlphaDistribution


class BranchMode(str, Enum):
    """Shape of the branch the system jumps to."""

    DIVERGENT = "divergent"
    BOUNDED = "bounded"


class TailRegime(str, Enum):
    """Mechanism producing a heavy loss tail."""

    FLUCTUATION_DRIVEN = "fluctuation_driven"
    PARAMETER_TAIL_DRIVEN = "parameter_tail_driven"


@dataclass(frozen=True)
class BranchSpec:
    """Power-law branch x~(alpha) entered once alpha exceeds alpha_c."""

    mode: BranchMode
    m: float
    C: float = 1.0
    alpha_c: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", BranchMode(self.mode))
        for name in ("m", "C", "alpha_c"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (math.isfinite(self.m) and self.m > 0.0):
            raise ValueError(f"Branch exponent m must be positive, got {self.m}.")
        if not (math.isfinite(self.C) and self.C > 0.0):
            raise ValueError(f"Branch amplitude C must be positive, got {self.C}.")
        if not math.isfinite(self.alpha_c):
            raise ValueError("alpha_c must be finite.")


@dataclass(frozen=True)
class LossMap:
    """g(x) = |x|^p above the threshold, ``baseline`` below it."""

    p: float
    baseline: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "baseline", float(self.baseline))
        if not (math.isfinite(self.p) and self.p > 0.0):
            raise ValueError(f"Loss exponent p must be positive, got {self.p}.")
        if not (math.isfinite(self.baseline) and self.baseline >= 0.0):
            raise ValueError(f"Baseline loss must be nonnegative, got {self.baseline}.")

    def __call__(self, x):
        return np.abs(x) ** self.p


@dataclass(frozen=True)
class TailPrediction:
    """Predicted GPD shape of the loss tail."""

    xi_predicted: float
    regime: TailRegime
    exponent_product: float

    @property
    def tail_index(self) -> float:
        return 1.0 / self.xi_predicted


def branch_value(spec: BranchSpec, alpha: float) -> float:
    """Evaluate x~(alpha) for alpha strictly above alpha_c.

    Raises
    ------
    BelowThreshold
        if alpha <= alpha_c
    """
    alpha = float(alpha)
    if not alpha > spec.alpha_c:
        raise BelowThreshold(
            f"The branch is defined only above alpha_c={spec.alpha_c}, got {alpha}."
        )
    return float(_branch(spec, np.array([alpha - spec.alpha_c]))[0])


def _branch(spec: BranchSpec, offsets: np.ndarray) -> np.ndarray:
    exponent = -spec.m if spec.mode is BranchMode.DIVERGENT else spec.m
    return spec.C * offsets**exponent


def losses(spec: BranchSpec, lossmap: LossMap, alphas) -> np.ndarray:
    """Vectorized loss; element i equals ``loss(spec, lossmap, alphas[i])`` bit for bit."""
    alphas = np.asarray(alphas, dtype=float)
    offsets = alphas - spec.alpha_c
    out = np.full(alphas.shape, lossmap.baseline, dtype=float)

    above = offsets > 0.0
    out[above] = lossmap(_branch(spec, offsets[above]))

    at_threshold = offsets == 0.0
    if spec.mode is BranchMode.DIVERGENT:
        out[at_threshold] = math.inf
    else:
        out[at_threshold] = max(lossmap.baseline, 0.0)
    return out


def loss(spec: BranchSpec, lossmap: LossMap, alpha: float) -> float:
    """Loss incurred at one value of the control parameter.

    Below alpha_c the loss is the baseline. Exactly at alpha_c a bounded branch gives
    g(0) = 0 merged with the baseline, while a divergent branch gives +inf; the latter
    has probability zero under a continuous alpha distribution.
    """
    return float(losses(spec, lossmap, np.array([float(alpha)]))[0])


def eta(spec: BranchSpec, lossmap: LossMap, y: float) -> float:
    """Return the offset eta(y) with loss(alpha_c + eta(y)) = y.

    Divergent: eta(y) = (C^p / y)^(1/(m p)), which shrinks to 0 as y grows.
    Bounded:   eta(y) = (y / C^p)^(1/(m p)), which grows with y.

    Raises
    ------
    NotInvertible
        if y is not above the baseline loss
    """
    y = float(y)
    if not (y > lossmap.baseline and y > 0.0):
        raise NotInvertible(f"Loss level y={y} must exceed the baseline {lossmap.baseline}.")
    return float(eta_values(spec, lossmap, np.array([y]))[0])


def eta_values(spec: BranchSpec, lossmap: LossMap, ys) -> np.ndarray:
    """Vectorized ``eta``; callers are responsible for checking ys > baseline."""
    ys = np.asarray(ys, dtype=float)
    scale = spec.C**lossmap.p
    inverse_exponent = 1.0 / (spec.m * lossmap.p)
    if spec.mode is BranchMode.DIVERGENT:
        return (scale / ys) ** inverse_exponent
    return (ys / scale) ** inverse_exponent


def predict_tail(
    spec: BranchSpec, lossmap: LossMap, alpha_dist: "AlphaDistribution"
) -> TailPrediction:
    """Predict the GPD shape of the loss tail from the branch, loss map and alpha law.

    A divergent branch fed by a density that is positive and finite at alpha_c, with
    mass above alpha_c, yields xi = m*p. A bounded branch needs alpha itself to have a
    Pareto tail of index a, and then xi = m*p / a.

    Raises
    ------
    NoHeavyTailRegime
        if neither condition holds
    """
    product = spec.m * lossmap.p

    if spec.mode is BranchMode.DIVERGENT:
        density = float(alpha_dist.density(spec.alpha_c))
        reached = alpha_dist.exceedance_probability(spec.alpha_c) > 0.0
        if reached and density > 0.0 and math.isfinite(density):
            return TailPrediction(
                xi_predicted=product,
                regime=TailRegime.FLUCTUATION_DRIVEN,
                exponent_product=product,
            )
        raise NoHeavyTailRegime(
            f"A divergent branch needs positive density at alpha_c={spec.alpha_c} and mass "
            f"above it; {alpha_dist.family.value} has density {density} there."
        )

    tail_index = alpha_dist.upper_tail_index
    if tail_index is not None and alpha_dist.exceedance_probability(spec.alpha_c) > 0.0:
        return TailPrediction(
            xi_predicted=product / tail_index,
            regime=TailRegime.PARAMETER_TAIL_DRIVEN,
            exponent_product=product,
        )
    raise NoHeavyTailRegime(
        f"A bounded branch only produces a heavy tail from a Pareto-tailed alpha; "
        f"got {alpha_dist.family.value}."
    )


def analytic_survival(
    spec: BranchSpec, lossmap: LossMap, alpha_dist: "AlphaDistribution", ys
) -> Union[float, np.ndarray]:
    """Exact Pr(Y > y) for y above the baseline, computed from the alpha law.

    Bounded:   1 - F(alpha_c + eta(y))
    Divergent: F(alpha_c + eta(y)) - F(alpha_c)
    """
    scalar = np.ndim(ys) == 0
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if np.any(~(ys > lossmap.baseline)) or np.any(~(ys > 0.0)):
        raise NotInvertible(f"All loss levels must exceed the baseline {lossmap.baseline}.")

    edge = spec.alpha_c + eta_values(spec, lossmap, ys)
    if spec.mode is BranchMode.BOUNDED:
        survival = 1.0 - alpha_dist.cdf(edge)
    else:
        survival = alpha_dist.cdf(edge) - alpha_dist.cdf(spec.alpha_c)
    survival = np.clip(survival, 0.0, 1.0)
    return float(survival[0]) if scalar else survival
