"""Distributions for the control parameter and the deterministic Monte Carlo engine.

Uniform variates come from a counter-based stream: the variate with global index i is
a pure function of (seed, i). Indices are grouped into fixed blocks of ``BLOCK_SIZE``
draws, each block keyed by its own Philox counter, so any split of the blocks across
worker processes reproduces the same bits.
"""
# pylint: disable=invalid-name
import math
import multiprocessing
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import special

from jumptail.exceptions import InvalidDistribution, NoThresholdMass, OutOfRange
from jumptail.jumpmap import BranchSpec, LossMap, losses

BLOCK_SIZE = 65_536
MAX_SEED = 2**64


class DistributionFamily(str, Enum):
    """Supported laws for the control parameter."""

    UNIFORM = "uniform"
    TRUNCATED_NORMAL = "truncated_normal"
    EXPONENTIAL = "exponential"
    PARETO = "pareto"


PARAMETER_NAMES = {
    DistributionFamily.UNIFORM: ("lo", "hi"),
    DistributionFamily.TRUNCATED_NORMAL: ("mu", "sigma", "lo", "hi"),
    DistributionFamily.EXPONENTIAL: ("rate", "shift"),
    DistributionFamily.PARETO: ("scale", "tail_index", "shift"),
}


@dataclass(frozen=True)
class AlphaDistribution:
    """Law of the random control parameter alpha.

    Parameters
    ----------
    family : DistributionFamily
    parameters : tuple of float
        ordered as in ``PARAMETER_NAMES[family]``:
        Uniform(lo, hi), TruncatedNormal(mu, sigma, lo, hi), Exponential(rate, shift),
        Pareto(scale, tail_index, shift) with support [shift + scale, inf)
    """

    family: DistributionFamily
    parameters: tuple

    def __post_init__(self):
        family = DistributionFamily(self.family)
        params = tuple(float(v) for v in self.parameters)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "parameters", params)

        names = PARAMETER_NAMES[family]
        if len(params) != len(names):
            raise InvalidDistribution(
                f"{family.value} takes parameters {names}, got {len(params)} values."
            )
        if not all(math.isfinite(v) for v in params):
            raise InvalidDistribution(f"{family.value} parameters must be finite, got {params}.")

        if family is DistributionFamily.UNIFORM:
            lo, hi = params
            if not lo < hi:
                raise InvalidDistribution(f"Uniform needs lo < hi, got ({lo}, {hi}).")
        elif family is DistributionFamily.TRUNCATED_NORMAL:
            mu, sigma, lo, hi = params
            if not sigma > 0.0:
                raise InvalidDistribution(f"Truncated normal needs sigma > 0, got {sigma}.")
            if not lo < hi:
                raise InvalidDistribution(f"Truncated normal needs lo < hi, got ({lo}, {hi}).")
            if not self._normal_mass() > 0.0:
                raise InvalidDistribution("Truncation interval carries no normal mass.")
        elif family is DistributionFamily.EXPONENTIAL:
            if not params[0] > 0.0:
                raise InvalidDistribution(f"Exponential needs rate > 0, got {params[0]}.")
        else:
            scale, tail_index, _ = params
            if not (scale > 0.0 and tail_index > 0.0):
                raise InvalidDistribution(
                    f"Pareto needs scale > 0 and tail_index > 0, got {scale}, {tail_index}."
                )

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "AlphaDistribution":
        return cls(DistributionFamily.UNIFORM, (lo, hi))

    @classmethod
    def truncated_normal(cls, mu: float, sigma: float, lo: float, hi: float) -> "AlphaDistribution":
        return cls(DistributionFamily.TRUNCATED_NORMAL, (mu, sigma, lo, hi))

    @classmethod
    def exponential(cls, rate: float, shift: float = 0.0) -> "AlphaDistribution":
        return cls(DistributionFamily.EXPONENTIAL, (rate, shift))

    @classmethod
    def pareto(cls, scale: float, tail_index: float, shift: float = 0.0) -> "AlphaDistribution":
        return cls(DistributionFamily.PARETO, (scale, tail_index, shift))

    @classmethod
    def from_parameters(cls, family: str, parameters: dict) -> "AlphaDistribution":
        """Build a distribution from a family name and a mapping of named parameters."""
        try:
            family_enum = DistributionFamily(family)
        except ValueError as err:
            raise InvalidDistribution(
                f"Unknown family <{family}>; expected one of "
                f"{[f.value for f in DistributionFamily]}."
            ) from err
        names = PARAMETER_NAMES[family_enum]
        missing = [n for n in names if n not in parameters]
        unknown = [k for k in parameters if k not in names]
        if missing or unknown:
            raise InvalidDistribution(
                f"{family_enum.value} parameters must be exactly {list(names)}; "
                f"missing {missing}, unexpected {unknown}."
            )
        return cls(family_enum, tuple(parameters[n] for n in names))

    @property
    def named_parameters(self) -> dict:
        return dict(zip(PARAMETER_NAMES[self.family], self.parameters))

    @property
    def support(self) -> tuple:
        """Closed support interval (upper end may be inf)."""
        fam, prm = self.family, self.parameters
        if fam is DistributionFamily.UNIFORM:
            return prm[0], prm[1]
        if fam is DistributionFamily.TRUNCATED_NORMAL:
            return prm[2], prm[3]
        if fam is DistributionFamily.EXPONENTIAL:
            return prm[1], math.inf
        return prm[2] + prm[0], math.inf

    @property
    def upper_tail_index(self) -> Optional[float]:
        """Index a of a power-law upper tail Pr(alpha > t) ~ t^-a, None for lighter tails."""
        if self.family is DistributionFamily.PARETO:
            return self.parameters[1]
        return None

    def _normal_mass(self) -> float:
        mu, sigma, lo, hi = self.parameters
        return float(special.ndtr((hi - mu) / sigma) - special.ndtr((lo - mu) / sigma))

    def cdf(self, a):
        """Closed-form CDF, elementwise."""
        scalar = np.ndim(a) == 0
        a = np.atleast_1d(np.asarray(a, dtype=float))
        fam, prm = self.family, self.parameters

        if fam is DistributionFamily.UNIFORM:
            lo, hi = prm
            out = np.clip((a - lo) / (hi - lo), 0.0, 1.0)
        elif fam is DistributionFamily.TRUNCATED_NORMAL:
            mu, sigma, lo, hi = prm
            phi_lo = special.ndtr((lo - mu) / sigma)
            out = (special.ndtr((np.clip(a, lo, hi) - mu) / sigma) - phi_lo) / self._normal_mass()
            out = np.clip(out, 0.0, 1.0)
            out[a >= hi] = 1.0
        elif fam is DistributionFamily.EXPONENTIAL:
            rate, shift = prm
            out = np.where(a > shift, -np.expm1(-rate * np.maximum(a - shift, 0.0)), 0.0)
        else:
            scale, tail_index, shift = prm
            offset = a - shift
            out = np.where(
                offset > scale, 1.0 - (scale / np.maximum(offset, scale)) ** tail_index, 0.0
            )
        return float(out[0]) if scalar else out

    def quantile(self, q):
        """Inverse CDF on the open unit interval.

        Raises
        ------
        OutOfRange
            if any level is not strictly between 0 and 1
        """
        scalar = np.ndim(q) == 0
        q = np.atleast_1d(np.asarray(q, dtype=float))
        if np.any(~((q > 0.0) & (q < 1.0))):
            raise OutOfRange("Quantile levels must lie strictly between 0 and 1.")
        fam, prm = self.family, self.parameters

        if fam is DistributionFamily.UNIFORM:
            lo, hi = prm
            out = lo + q * (hi - lo)
        elif fam is DistributionFamily.TRUNCATED_NORMAL:
            mu, sigma, lo, hi = prm
            phi_lo = special.ndtr((lo - mu) / sigma)
            out = np.clip(mu + sigma * special.ndtri(phi_lo + q * self._normal_mass()), lo, hi)
        elif fam is DistributionFamily.EXPONENTIAL:
            rate, shift = prm
            out = shift - np.log1p(-q) / rate
        else:
            scale, tail_index, shift = prm
            out = shift + scale * (1.0 - q) ** (-1.0 / tail_index)
        return float(out[0]) if scalar else out

    def density(self, a):
        """Probability density, zero outside the closed support."""
        scalar = np.ndim(a) == 0
        a = np.atleast_1d(np.asarray(a, dtype=float))
        lo, hi = self.support
        inside = (a >= lo) & (a <= hi)
        fam, prm = self.family, self.parameters

        if fam is DistributionFamily.UNIFORM:
            out = np.full(a.shape, 1.0 / (hi - lo))
        elif fam is DistributionFamily.TRUNCATED_NORMAL:
            mu, sigma = prm[0], prm[1]
            z = (a - mu) / sigma
            out = np.exp(-0.5 * z * z) / (sigma * math.sqrt(2.0 * math.pi) * self._normal_mass())
        elif fam is DistributionFamily.EXPONENTIAL:
            rate, shift = prm
            out = rate * np.exp(-rate * np.maximum(a - shift, 0.0))
        else:
            scale, tail_index, shift = prm
            offset = np.maximum(a - shift, scale)
            out = tail_index * scale**tail_index / offset ** (tail_index + 1.0)
        out = np.where(inside, out, 0.0)
        return float(out[0]) if scalar else out

    def exceedance_probability(self, threshold):
        """Pr(alpha > threshold) = 1 - cdf(threshold)."""
        return 1.0 - self.cdf(threshold)

    def reaches(self, alpha_c: float) -> bool:
        """Whether Pr(alpha >= alpha_c) is strictly positive."""
        return self.exceedance_probability(alpha_c) > 0.0


@dataclass(frozen=True)
class SampleBatch:
    """Paired control-parameter draws and losses.

    ``losses[i]`` is ``jumpmap.loss`` at ``alphas[i]``; both arrays are read-only.
    """

    seed: int
    n: int
    alphas: np.ndarray
    losses: np.ndarray

    def __post_init__(self):
        alphas = np.array(self.alphas, dtype=float)
        values = np.array(self.losses, dtype=float)
        if alphas.shape != (self.n,) or values.shape != (self.n,):
            raise ValueError(
                f"Batch arrays must both have length n={self.n}, "
                f"got {alphas.shape} and {values.shape}."
            )
        alphas.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "losses", values)

    def __eq__(self, other):
        if not isinstance(other, SampleBatch):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.n == other.n
            and self.alphas.tobytes() == other.alphas.tobytes()
            and self.losses.tobytes() == other.losses.tobytes()
        )


def cdf(dist: AlphaDistribution, a):
    """F_alpha(a)."""
    return dist.cdf(a)


def quantile(dist: AlphaDistribution, q):
    """F_alpha^-1(q) for 0 < q < 1."""
    return dist.quantile(q)


def exceedance_probability(dist: AlphaDistribution, threshold):
    """Pr(alpha > threshold)."""
    return dist.exceedance_probability(threshold)


def _check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"Seed must be an integer, got <{type(seed)}>.")
    if not 0 <= int(seed) < MAX_SEED:
        raise ValueError(f"Seed must be a 64-bit unsigned integer, got {seed}.")
    return int(seed)


def uniform_block(seed: int, block: int, count: int) -> np.ndarray:
    """The first ``count`` uniforms of a block, each strictly inside (0, 1).

    The Philox key is the seed and the third counter word is the block index, so
    blocks never share counter values.
    """
    bit_generator = np.random.Philox(key=_check_seed(seed), counter=int(block) << 128)
    raw = bit_generator.random_raw(int(count))
    # 53 high bits, centred in their cell so neither 0 nor 1 can occur.
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * (2.0**-53)


def uniform_stream(seed: int, n: int) -> np.ndarray:
    """Uniforms for global indices 0..n-1."""
    return np.concatenate([uniform_block(seed, b, c) for b, c in _blocks(n)]) if n else np.empty(0)


def _blocks(n: int) -> list:
    return [
        (block, min(BLOCK_SIZE, n - block * BLOCK_SIZE))
        for block in range(math.ceil(n / BLOCK_SIZE))
    ]


def _draw_block(task: tuple) -> tuple:
    dist, spec, lossmap, seed, block, count = task
    alphas = dist.quantile(uniform_block(seed, block, count))
    if spec is None:
        return alphas, None
    return alphas, losses(spec, lossmap, alphas)


def _run_blocks(tasks: list, workers: int) -> list:
    if workers > 1 and len(tasks) > 1:
        with multiprocessing.Pool(processes=min(workers, len(tasks))) as pool:
            return pool.map(_draw_block, tasks)
    return [_draw_block(task) for task in tasks]


def _check_count(n: int) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"Sample count must be a positive integer, got {n}.")
    return int(n)


def sample_alphas(dist: AlphaDistribution, n: int, seed: int, workers: int = 1) -> np.ndarray:
    """Draw n values of alpha by inverse-CDF sampling of the counter-based stream."""
    n, seed = _check_count(n), _check_seed(seed)
    tasks = [(dist, None, None, seed, b, c) for b, c in _blocks(n)]
    return np.concatenate([alphas for alphas, _ in _run_blocks(tasks, workers)])


def sample_losses(
    dist: AlphaDistribution,
    spec: BranchSpec,
    lossmap: LossMap,
    n: int,
    seed: int,
    workers: int = 1,
) -> SampleBatch:
    """Draw n control-parameter values and the losses they induce.

    The result depends only on (dist, spec, lossmap, n, seed), never on ``workers``.

    Raises
    ------
    NoThresholdMass
        if alpha never reaches alpha_c under ``dist``
    """
    n, seed = _check_count(n), _check_seed(seed)
    if not dist.reaches(spec.alpha_c):
        raise NoThresholdMass(
            f"{dist.family.value}{dist.parameters} puts no mass at or above "
            f"alpha_c={spec.alpha_c}."
        )
    tasks = [(dist, spec, lossmap, seed, b, c) for b, c in _blocks(n)]
    results = _run_blocks(tasks, max(1, int(workers)))
    return SampleBatch(
        seed=seed,
        n=n,
        alphas=np.concatenate([a for a, _ in results]),
        losses=np.concatenate([y for _, y in results]),
    )
