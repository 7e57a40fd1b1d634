"""One-parameter polynomial potentials V(x; alpha), their equilibria and critical thresholds."""
# pylint: disable=invalid-name
import math
from collections import namedtuple
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from jumptail.exceptions import (
    DegenerateLeadingCoefficient,
    InvalidPotential,
    NoBranchOnSide,
    NoTransitionInRange,
)

ROOT_TOL = 1e-10
HESS_TOL = 1e-8
MAX_DEGREE = 6
LEADING_TOL = 1e-14

BRACKET_REL_WIDTH = 1e-9
BRANCH_OFFSETS = np.geomspace(1e-6, 1e-3, 8)
BRANCH_NEAR_TOL = 1e-2

# Root refinement tolerances; _IMAG_TOL applies to the companion-matrix path only.
_IMAG_TOL = 1e-7
_MERGE_TOL = 1e-7
_MAX_POLISH = 8


class PotentialForm(str, Enum):
    """Supported potential families."""

    FOLD = "fold"
    CUSP = "cusp"
    CUSTOM = "custom_polynomial"


class StabilityKind(str, Enum):
    """Classification of an equilibrium by the sign of the curvature of V."""

    STABLE = "stable"
    UNSTABLE = "unstable"
    DEGENERATE = "degenerate"


class Side(str, Enum):
    """Side of alpha_c on which a branch is followed."""

    ABOVE = "above"
    BELOW = "below"


Equilibrium = namedtuple("Equilibrium", "location, kind, curvature")


@dataclass(frozen=True)
class PotentialModel:
    """A family V(x; alpha) = sum_k (c_k + d_k * alpha) x^k.

    Parameters
    ----------
    form : PotentialForm
        ``FOLD`` is x^3 - alpha*x and takes no coefficients.
        ``CUSP`` is x^4/4 + a(alpha) x^2/2 + b(alpha) x with coefficients [a0, a1, b0, b1],
        a(alpha) = a0 + a1*alpha and b(alpha) = b0 + b1*alpha.
        ``CUSTOM`` takes interleaved coefficients [c0, d0, c1, d1, ...], degree <= 6.
    coefficients : tuple of float
    alpha_range : tuple of float
        the range over which the leading coefficient must stay nonzero
    """

    form: PotentialForm
    coefficients: tuple = ()
    alpha_range: tuple = (-1.0, 1.0)
    _base: np.ndarray = field(init=False, repr=False, compare=False)
    _slope: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        form = PotentialForm(self.form)
        coefficients = tuple(float(c) for c in self.coefficients)
        alpha_range = tuple(float(a) for a in self.alpha_range)
        object.__setattr__(self, "form", form)
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "alpha_range", alpha_range)

        if len(alpha_range) != 2 or not alpha_range[0] < alpha_range[1]:
            raise InvalidPotential(f"alpha_range must be an increasing pair, got {alpha_range}.")
        if not all(math.isfinite(c) for c in coefficients):
            raise InvalidPotential("Potential coefficients must be finite.")

        if form is PotentialForm.FOLD:
            if coefficients:
                raise InvalidPotential("The fold form takes no free coefficients.")
            base = [0.0, 0.0, 0.0, 1.0]
            slope = [0.0, -1.0, 0.0, 0.0]
        elif form is PotentialForm.CUSP:
            if len(coefficients) != 4:
                raise InvalidPotential(
                    f"The cusp form takes exactly four coefficients [a0, a1, b0, b1], "
                    f"got {len(coefficients)}."
                )
            a0, a1, b0, b1 = coefficients
            base = [0.0, b0, a0 / 2.0, 0.0, 0.25]
            slope = [0.0, b1, a1 / 2.0, 0.0, 0.0]
        else:
            if len(coefficients) % 2 != 0:
                raise InvalidPotential("Custom coefficients must be interleaved (c_k, d_k) pairs.")
            if len(coefficients) > 2 * (MAX_DEGREE + 1):
                raise InvalidPotential(f"Custom polynomials are limited to degree {MAX_DEGREE}.")
            base = list(coefficients[0::2])
            slope = list(coefficients[1::2])

        base_arr = np.array(base, dtype=float)
        slope_arr = np.array(slope, dtype=float)
        nonzero = np.nonzero((base_arr != 0.0) | (slope_arr != 0.0))[0]
        degree = int(nonzero[-1]) if nonzero.size else 0
        if degree < 2 or degree > MAX_DEGREE:
            raise InvalidPotential(
                f"Potential degree must be within [2, {MAX_DEGREE}], got {degree}."
            )
        base_arr = base_arr[: degree + 1]
        slope_arr = slope_arr[: degree + 1]

        lo, hi = alpha_range
        for checked in (lo, 0.5 * (lo + hi), hi):
            if base_arr[-1] + slope_arr[-1] * checked == 0.0:
                raise InvalidPotential(
                    f"Leading coefficient of degree {degree} vanishes at alpha={checked}."
                )

        object.__setattr__(self, "_base", base_arr)
        object.__setattr__(self, "_slope", slope_arr)

    @property
    def degree(self) -> int:
        """Degree of V in x."""
        return len(self._base) - 1

    def polynomial(self, alpha: float) -> np.ndarray:
        """Coefficients of V(.; alpha) in x, highest degree first."""
        return (self._base + self._slope * float(alpha))[::-1]


@dataclass(frozen=True)
class EquilibriumSet:
    """Classified roots of dV/dx = 0 at one alpha, ordered by location."""

    alpha: float
    equilibria: tuple = ()

    @property
    def locations(self) -> np.ndarray:
        return np.array([e.location for e in self.equilibria], dtype=float)

    @property
    def kinds(self) -> list:
        return [e.kind for e in self.equilibria]

    @property
    def stable_count(self) -> int:
        return sum(1 for e in self.equilibria if e.kind is StabilityKind.STABLE)

    def of_kind(self, kind: StabilityKind) -> list:
        return [e for e in self.equilibria if e.kind is kind]


@dataclass(frozen=True)
class CriticalThreshold:
    """Location of a change in the stable-equilibrium count."""

    alpha_c: float
    bracket: tuple
    stable_count_below: int
    stable_count_above: int


def evaluate(model: PotentialModel, x: float, alpha: float, derivative_order: int = 0) -> float:
    """Evaluate V, dV/dx or d2V/dx2 at (x, alpha) by Horner's rule, highest degree first."""
    if derivative_order not in (0, 1, 2):
        raise ValueError(f"derivative_order must be 0, 1 or 2, got {derivative_order}.")
    coeffs = model.polynomial(alpha)
    if derivative_order:
        coeffs = np.polyder(coeffs, derivative_order)
    return _horner(coeffs, float(x))


def _horner(coeffs_high_first: np.ndarray, x: float) -> float:
    acc = 0.0
    for c in coeffs_high_first:
        acc = acc * x + float(c)
    return acc


def find_equilibria(model: PotentialModel, alpha: float) -> EquilibriumSet:
    """Locate and classify all real equilibria of V(.; alpha).

    The derivative is solved in closed form up to degree 3; higher degrees use the
    eigenvalues of the companion matrix. Every real root is then polished by Newton steps.

    Raises
    ------
    DegenerateLeadingCoefficient
        if the leading coefficient of dV/dx vanishes at this alpha
    """
    alpha = float(alpha)
    poly = model.polynomial(alpha)
    first = np.polyder(poly)
    second = np.polyder(first)

    scale = max(1.0, float(np.max(np.abs(first))))
    if abs(first[0]) <= LEADING_TOL * scale:
        raise DegenerateLeadingCoefficient(
            f"Leading coefficient of dV/dx is {first[0]!r} at alpha={alpha}."
        )

    roots = real_polynomial_roots(first)
    equilibria = []
    for z in roots:
        curvature = _horner(second, z)
        equilibria.append(Equilibrium(z, _classify(curvature), curvature))
    return EquilibriumSet(alpha=alpha, equilibria=tuple(equilibria))


def _classify(curvature: float) -> StabilityKind:
    if curvature > HESS_TOL:
        return StabilityKind.STABLE
    if curvature < -HESS_TOL:
        return StabilityKind.UNSTABLE
    return StabilityKind.DEGENERATE


def real_polynomial_roots(coeffs_high_first: np.ndarray) -> list:
    """Return the sorted, distinct real roots of a polynomial with nonzero leading term."""
    coeffs = np.asarray(coeffs_high_first, dtype=float)
    degree = len(coeffs) - 1
    if degree == 0:
        return []
    if degree == 1:
        return [-coeffs[1] / coeffs[0]]
    if degree == 2:
        return _polished(coeffs, _quadratic_roots(*coeffs))
    if degree == 3:
        return _polished(coeffs, _cubic_roots(*coeffs))
    return _companion_roots(coeffs)


def _newton(coeffs: np.ndarray, deriv: np.ndarray, z: float) -> float:
    for step in range(_MAX_POLISH):
        residual = _horner(coeffs, z)
        if step > 0 and abs(residual) <= ROOT_TOL * (1.0 + abs(z)):
            break
        slope = _horner(deriv, z)
        if slope == 0.0 or not math.isfinite(slope):
            break
        z = z - residual / slope
    return z


def _merged(roots) -> list:
    merged: list = []
    for z in sorted(roots):
        if merged and abs(z - merged[-1]) <= _MERGE_TOL * (1.0 + abs(z)):
            continue
        merged.append(z)
    return merged


def _polished(coeffs: np.ndarray, roots: list) -> list:
    """Newton-refine closed-form roots; a step is kept only if it stays on the same root."""
    deriv = np.polyder(coeffs)
    refined = []
    for z in roots:
        candidate = _newton(coeffs, deriv, z)
        if (
            math.isfinite(candidate)
            and abs(candidate - z) <= _MERGE_TOL * (1.0 + abs(z))
            and abs(_horner(coeffs, candidate)) < abs(_horner(coeffs, z))
        ):
            z = candidate
        refined.append(z)
    return _merged(refined)


def _quadratic_roots(a: float, b: float, c: float) -> list:
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return []
    if disc == 0.0:
        return [-b / (2.0 * a)]
    # Avoid cancellation between -b and sqrt(disc).
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    if q == 0.0:
        return [0.0]
    return sorted({q / a, c / q})


def _cubic_roots(a: float, b: float, c: float, d: float) -> list:
    """Real roots of a*x^3 + b*x^2 + c*x + d via the depressed cubic t^3 + p*t + q."""
    B, C, D = b / a, c / a, d / a
    shift = B / 3.0
    p = C - B * B / 3.0
    q = 2.0 * B**3 / 27.0 - B * C / 3.0 + D

    if p == 0.0 and q == 0.0:
        ts = [0.0]
    else:
        disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
        if disc < 0.0:
            # three distinct real roots: trigonometric form
            r = 2.0 * math.sqrt(-p / 3.0)
            cos_arg = (3.0 * q) / (2.0 * p) * math.sqrt(-3.0 / p)
            phi = math.acos(min(1.0, max(-1.0, cos_arg)))
            ts = [r * math.cos(phi / 3.0 - 2.0 * math.pi * k / 3.0) for k in range(3)]
        elif disc > 0.0:
            s = math.sqrt(disc)
            ts = [float(np.cbrt(-q / 2.0 + s) + np.cbrt(-q / 2.0 - s))]
        else:
            ts = [3.0 * q / p, -3.0 * q / (2.0 * p)]

    return sorted({t - shift for t in ts})


def _companion_roots(coeffs: np.ndarray) -> list:
    deriv = np.polyder(coeffs)
    candidates = []
    for r in np.roots(coeffs):
        if abs(r.imag) > _IMAG_TOL * (1.0 + abs(r.real)):
            continue
        z = _newton(coeffs, deriv, float(r.real))
        if math.isfinite(z) and abs(_horner(coeffs, z)) <= ROOT_TOL * (1.0 + abs(z)):
            candidates.append(z)
    return _merged(candidates)


def find_critical_threshold(
    model: PotentialModel, alpha_range: Optional[tuple] = None
) -> CriticalThreshold:
    """Bisect alpha_range for the point where the number of stable equilibria changes.

    Raises
    ------
    NoTransitionInRange
        if the stable count is the same at both ends of the range
    """
    lo, hi = (float(a) for a in (alpha_range if alpha_range is not None else model.alpha_range))
    if not lo < hi:
        raise ValueError(f"alpha_range must be increasing, got ({lo}, {hi}).")

    count_lo = find_equilibria(model, lo).stable_count
    count_hi = find_equilibria(model, hi).stable_count
    if count_lo == count_hi:
        raise NoTransitionInRange(
            f"Stable equilibrium count is {count_lo} at both alpha={lo} and alpha={hi}."
        )

    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if hi - lo <= BRACKET_REL_WIDTH * (1.0 + abs(mid)) or mid in (lo, hi):
            break
        if find_equilibria(model, mid).stable_count == count_lo:
            lo = mid
        else:
            hi = mid

    return CriticalThreshold(
        alpha_c=0.5 * (lo + hi),
        bracket=(lo, hi),
        stable_count_below=count_lo,
        stable_count_above=find_equilibria(model, hi).stable_count,
    )


def branch_exponent_estimate(model: PotentialModel, alpha_c: float, side: Side) -> float:
    """Fit m in |x*(alpha) - x*(alpha_c)| ~ |alpha - alpha_c|^m near the threshold.

    The branch is followed over 8 geometric offsets in [1e-6, 1e-3], preferring stable
    equilibria. Its origin x*(alpha_c) is the point at alpha_c where dV/dx and d2V/dx2
    come closest to vanishing together, chosen among the equilibria and the inflection
    points of V at alpha_c.

    Raises
    ------
    NoBranchOnSide
        if no equilibrium branch leaves x*(alpha_c) on the given side
    """
    side = Side(side)
    sign = 1.0 if side is Side.ABOVE else -1.0
    alpha_c = float(alpha_c)

    candidate_sets = []
    for offset in BRANCH_OFFSETS:
        eq_set = find_equilibria(model, alpha_c + sign * offset)
        preferred = eq_set.of_kind(StabilityKind.STABLE) or list(eq_set.equilibria)
        if not preferred:
            raise NoBranchOnSide(
                f"No equilibria at alpha={alpha_c + sign * offset} ({side.value} alpha_c)."
            )
        candidate_sets.append([e.location for e in preferred])

    poly = model.polynomial(alpha_c)
    first, second = np.polyder(poly), np.polyder(poly, 2)
    references = real_polynomial_roots(second)
    references += [e.location for e in find_equilibria(model, alpha_c).equilibria]
    if not references:
        raise NoBranchOnSide(f"No branch point found at alpha_c={alpha_c}.")
    x_ref = min(references, key=lambda r: abs(_horner(first, r)) + abs(_horner(second, r)))

    current = min(candidate_sets[0], key=lambda z: abs(z - x_ref))
    distances = [abs(current - x_ref)]
    for candidates in candidate_sets[1:]:
        current = min(candidates, key=lambda z: abs(z - current))
        distances.append(abs(current - x_ref))

    distances_arr = np.array(distances)
    if (
        not np.all(np.isfinite(distances_arr))
        or np.any(distances_arr <= 0.0)
        or distances_arr[0] > BRANCH_NEAR_TOL * (1.0 + abs(x_ref))
        or not distances_arr[-1] > distances_arr[0]
    ):
        raise NoBranchOnSide(
            f"No equilibrium branch leaves x={x_ref} {side.value} alpha_c={alpha_c}."
        )

    slope, _ = np.polyfit(np.log(BRANCH_OFFSETS), np.log(distances_arr), 1)
    return float(slope)


def safe_state(model: PotentialModel, alpha: float) -> Optional[float]:
    """Return the stable equilibrium closest to x = 0, or None when there is none."""
    stable = find_equilibria(model, alpha).of_kind(StabilityKind.STABLE)
    if not stable:
        return None
    return min((e.location for e in stable), key=abs)


def equilibrium_branch_diagram(model: PotentialModel, alphas) -> list:
    """Tabulate every equilibrium over a grid of alpha values.

    Returns
    -------
    list of (alpha, location, kind) tuples, in grid order then location order
    """
    rows = []
    for alpha in np.asarray(alphas, dtype=float):
        for eq in find_equilibria(model, float(alpha)).equilibria:
            rows.append((float(alpha), eq.location, eq.kind))
    return rows
