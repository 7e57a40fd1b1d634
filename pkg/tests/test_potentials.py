import math

import numpy as np
import pytest

from jumptail.exceptions import (
    DegenerateLeadingCoefficient,
    InvalidPotential,
    NoBranchOnSide,
    NoTransitionInRange,
)
from jumptail.potentials import (
    PotentialForm,
    PotentialModel,
    Side,
    StabilityKind,
    branch_exponent_estimate,
    equilibrium_branch_diagram,
    evaluate,
    find_critical_threshold,
    find_equilibria,
    real_polynomial_roots,
    safe_state,
)


def test_evaluate_fold(fold):
    assert evaluate(fold, 1.0, 0.0, 0) == 1.0
    assert evaluate(fold, 2.0, 3.0, 1) == 9.0


def test_evaluate_cusp_curvature():
    cusp = PotentialModel(PotentialForm.CUSP, (0.0, 1.0, 0.0, 0.0))
    assert evaluate(cusp, 2.0, 1.0, 2) == 13.0


def test_evaluate_rejects_third_derivative(fold):
    with pytest.raises(ValueError):
        evaluate(fold, 0.0, 0.0, 3)


def test_fold_equilibria_at_alpha_3(fold):
    eq_set = find_equilibria(fold, 3.0)

    assert eq_set.locations.tolist() == pytest.approx([-1.0, 1.0], rel=1e-12)
    assert eq_set.kinds == [StabilityKind.UNSTABLE, StabilityKind.STABLE]
    assert [e.curvature for e in eq_set.equilibria] == pytest.approx([-6.0, 6.0])


def test_fold_single_degenerate_equilibrium_at_zero(fold):
    eq_set = find_equilibria(fold, 0.0)

    assert eq_set.locations.tolist() == [0.0]
    assert eq_set.kinds == [StabilityKind.DEGENERATE]


def test_fold_has_no_equilibria_below_threshold(fold):
    assert find_equilibria(fold, -1.0).equilibria == ()


def test_fold_roots_match_closed_form_for_random_alphas(fold):
    alphas = 10.0 * (1.0 - np.random.default_rng(0).random(1000))  # in (0, 10]

    for alpha in alphas:
        eq_set = find_equilibria(fold, alpha)
        expected = math.sqrt(alpha / 3.0)
        lower, upper = eq_set.locations
        assert abs(lower + expected) <= 1e-10 * expected
        assert abs(upper - expected) <= 1e-10 * expected
        assert eq_set.of_kind(StabilityKind.STABLE)[0].location > 0.0


def test_equilibria_satisfy_root_tolerance_for_random_custom_models():
    rng = np.random.default_rng(42)
    for _ in range(200):
        degree = int(rng.integers(2, 7))
        coefficients = rng.normal(size=2 * (degree + 1))
        coefficients[-2] = 1.0 + abs(coefficients[-2])
        coefficients[-1] = 0.0
        model = PotentialModel(PotentialForm.CUSTOM, tuple(coefficients))
        alpha = float(rng.uniform(-2.0, 2.0))

        eq_set = find_equilibria(model, alpha)
        locations = eq_set.locations
        assert np.all(np.diff(locations) > 0.0)
        for z in locations:
            assert abs(evaluate(model, z, alpha, 1)) <= 1e-10 * (1.0 + abs(z))


def test_equilibria_satisfy_root_tolerance_for_random_cusps():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        model = PotentialModel(PotentialForm.CUSP, tuple(rng.normal(size=4)))
        alpha = float(rng.uniform(-5.0, 5.0))

        locations = find_equilibria(model, alpha).locations
        assert 1 <= locations.size <= 3
        for z in locations:
            assert abs(evaluate(model, z, alpha, 1)) <= 1e-10 * (1.0 + abs(z))


def test_cubic_root_with_cancellation_is_polished():
    model = PotentialModel(PotentialForm.CUSP, (0.389, 0.085, -0.025, 2.366))
    alpha = -4.566

    for z in find_equilibria(model, alpha).locations:
        assert abs(evaluate(model, z, alpha, 1)) <= 1e-10 * (1.0 + abs(z))


def _custom_from_poly(high_first) -> PotentialModel:
    ascending = np.asarray(high_first, dtype=float)[::-1]
    interleaved = np.zeros(2 * ascending.size)
    interleaved[0::2] = ascending
    return PotentialModel(PotentialForm.CUSTOM, tuple(interleaved))


def test_equilibrium_count_survives_a_shift_of_x():
    rng = np.random.default_rng(7)
    for _ in range(100):
        roots = np.sort(rng.uniform(-2.0, 2.0, size=3))
        shift = float(rng.uniform(-1.0, 1.0))
        potential = np.poly1d(np.polyint(4.0 * np.poly(roots)))
        shifted = potential(np.poly1d([1.0, shift]))

        original_count = len(find_equilibria(_custom_from_poly(potential.coeffs), 0.0).equilibria)
        shifted_count = len(find_equilibria(_custom_from_poly(shifted.coeffs), 0.0).equilibria)
        assert original_count == shifted_count == 3


def test_real_roots_of_quartic_use_companion_path():
    roots = real_polynomial_roots(np.poly([-2.0, -0.5, 1.0, 3.0]))
    assert roots == pytest.approx([-2.0, -0.5, 1.0, 3.0], rel=1e-10)


def test_cubic_with_one_real_root():
    # x^3 + x + 2 = (x + 1)(x^2 - x + 2)
    assert real_polynomial_roots(np.array([1.0, 0.0, 1.0, 2.0])) == pytest.approx([-1.0])


def test_fold_critical_threshold(fold):
    threshold = find_critical_threshold(fold, (-1.0, 1.0))

    assert abs(threshold.alpha_c) <= 1e-9
    lo, hi = threshold.bracket
    assert hi - lo <= 1e-9 * (1.0 + abs(threshold.alpha_c))
    assert threshold.stable_count_below != threshold.stable_count_above


def test_cusp_critical_threshold(cusp_fold_line):
    threshold = find_critical_threshold(cusp_fold_line)
    assert threshold.alpha_c == pytest.approx(2.0 / (3.0 * math.sqrt(3.0)), abs=1e-6)


def test_cusp_critical_threshold_against_dense_scan(cusp_fold_line):
    alphas = np.linspace(0.0, 1.0, 10_001)
    counts = np.array([find_equilibria(cusp_fold_line, a).stable_count for a in alphas])
    first_change = alphas[np.argmax(counts != counts[0])]

    threshold = find_critical_threshold(cusp_fold_line)
    assert abs(threshold.alpha_c - first_change) <= 1e-4


def test_fold_without_transition_in_range(fold):
    with pytest.raises(NoTransitionInRange):
        find_critical_threshold(fold, (1.0, 2.0))


def test_fold_branch_exponent_above(fold):
    assert branch_exponent_estimate(fold, 0.0, Side.ABOVE) == pytest.approx(0.5, abs=0.01)


def test_fold_has_no_branch_below(fold):
    with pytest.raises(NoBranchOnSide):
        branch_exponent_estimate(fold, 0.0, Side.BELOW)


def test_pitchfork_branch_exponent():
    # a(alpha) = -alpha, b = 0: dV/dx = x^3 - alpha x
    pitchfork = PotentialModel(PotentialForm.CUSP, (0.0, -1.0, 0.0, 0.0))
    assert branch_exponent_estimate(pitchfork, 0.0, "above") == pytest.approx(0.5, abs=0.01)


def test_cusp_saddle_node_branch_is_followed_below(cusp_fold_line):
    alpha_c = find_critical_threshold(cusp_fold_line).alpha_c
    assert branch_exponent_estimate(cusp_fold_line, alpha_c, Side.BELOW) == pytest.approx(
        0.5, abs=0.01
    )


def test_cusp_far_branch_is_not_mistaken_for_the_fold(cusp_fold_line):
    alpha_c = find_critical_threshold(cusp_fold_line).alpha_c
    with pytest.raises(NoBranchOnSide):
        branch_exponent_estimate(cusp_fold_line, alpha_c, Side.ABOVE)


def test_fold_rejects_coefficients():
    with pytest.raises(InvalidPotential):
        PotentialModel(PotentialForm.FOLD, (1.0,))


def test_cusp_needs_four_coefficients():
    with pytest.raises(InvalidPotential):
        PotentialModel("cusp", (1.0, 2.0))


def test_custom_degree_is_capped():
    with pytest.raises(InvalidPotential):
        PotentialModel("custom_polynomial", tuple([0.0, 0.0] * 7 + [1.0, 0.0]))


def test_custom_degree_must_be_at_least_two():
    with pytest.raises(InvalidPotential):
        PotentialModel("custom_polynomial", (0.0, 0.0, 1.0, 0.0))


def test_leading_coefficient_checked_at_midpoint():
    # V = (1 - alpha) x^3 loses its cubic term at alpha = 1, the midpoint of (-1, 3).
    with pytest.raises(InvalidPotential):
        PotentialModel("custom_polynomial", (0, 0, 0, 0, 0, 0, 1, -1), alpha_range=(-1.0, 3.0))


def test_degenerate_leading_coefficient_between_checked_points():
    model = PotentialModel("custom_polynomial", (0, 0, 0, 0, 0, 0, 1, -1), alpha_range=(-1.0, 2.0))
    with pytest.raises(DegenerateLeadingCoefficient):
        find_equilibria(model, 1.0)


def test_safe_state(fold):
    assert safe_state(fold, 3.0) == pytest.approx(1.0)
    assert safe_state(fold, -1.0) is None


def test_branch_diagram_rows(fold):
    rows = equilibrium_branch_diagram(fold, [-1.0, 0.0, 3.0])

    assert [row[0] for row in rows] == [0.0, 3.0, 3.0]
    assert rows[-1][1] == pytest.approx(1.0)
    assert rows[-1][2] is StabilityKind.STABLE
