import numpy as np
import numpy.testing as npt
import pytest

from pentakit.builders import fibonacci_rules, pointed_rules, trivial_rules, trivial_solution
from pentakit.errors import RangeError, UnsupportedRulesError
from pentakit.groups import GroupTable
from pentakit.models import FSolution, FusionRules
from pentakit.pentagon import check_all
from pentakit.solver import (
    SolveOptions,
    build_system,
    family_scale,
    fingerprint,
    gauge_invariants,
    invertible_counts,
    is_invertible,
    jacobian_check,
    solve_multiplicity_free,
)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"starts": 0},
        {"max_iterations": -1},
        {"residual_target": 1e-16},
        {"damping": 0.0},
        {"damping_up": 1.0},
        {"workers": 0},
    ],
)
def test_options_out_of_range(kwargs):
    with pytest.raises(RangeError):
        SolveOptions(**kwargs)


def test_multiplicities_are_unsupported():
    with pytest.raises(UnsupportedRulesError):
        build_system(FusionRules(np.full((1, 1, 1), 2, dtype=int)))


def test_trivial_system():
    system = build_system(trivial_rules())
    assert system.size == 1
    assert system.width == 2
    assert len(system.equations) == 1
    npt.assert_allclose(system.residual(np.array([0.7, 2.0])), [0.7**3 - 0.7**2, 0.7 * 2.0 - 1.0])
    npt.assert_allclose(system.residual(np.array([1.0, 1.0])), [0.0, 0.0])


def test_zero_family_is_excluded():
    system = build_system(trivial_rules())
    # zero solves every pentagon row but not the determinant row
    npt.assert_allclose(system.residual(np.array([0.0, 5.0])), [0.0, -1.0])
    assert system.measure(system.start(np.array([0.0]))) == float("inf")
    assert system.measure(system.start(np.array([1.0]))) <= 1e-15


@pytest.mark.parametrize("epsilon", [1e-3, 1e-6])
def test_shrunken_families_do_not_count_as_solved(epsilon, z2_nontrivial):
    for sol in (trivial_solution(), z2_nontrivial):
        system = build_system(sol.rules)
        f = np.array([sol.block(*key).item() for key in system.unknowns])
        assert system.measure(system.start(f)) <= 1e-14
        assert system.measure(system.start(epsilon * f)) >= 0.5


def test_fibonacci_shrunken_is_not_solved(fibonacci):
    system = build_system(fibonacci.rules)
    f = np.array([fibonacci.block(*key).item() for key in system.unknowns])
    assert system.measure(system.start(f)) <= 1e-9
    assert system.measure(system.start(1e-6 * f)) > 1e-6


def test_invertibility_is_scale_free():
    tiny = 1e-9 * np.eye(2)
    assert is_invertible(tiny, scale=1e-9)
    assert not is_invertible(tiny, scale=1.0)
    assert not is_invertible(np.array([[1.0, 1.0], [1.0, 1.0 + 1e-12]]), scale=1.0)
    assert not is_invertible(np.ones((2, 3)), scale=1.0)
    assert is_invertible(np.array([[0.0, 2.0], [3.0, 0.0]]), scale=3.0)


def test_rescaled_family_keeps_counts_and_invariants(z2_nontrivial):
    small = FSolution.from_blocks(
        z2_nontrivial.rules, {key: 1e-10 * coords for key, coords in z2_nontrivial.block_dict().items()}
    )
    assert family_scale(small) == pytest.approx(1e-10)
    assert invertible_counts(small) == invertible_counts(z2_nontrivial) == (0, 8)
    invariants = gauge_invariants(small)
    assert not np.any(np.isnan(invariants))
    # ratios of equal-charge pairs do not depend on the overall scale
    assert np.any(np.isclose(invariants, 1.0))


def test_jacobian_matches_finite_differences(rng):
    assert jacobian_check(trivial_rules(), np.array([0.7])) <= 1e-8
    assert jacobian_check(pointed_rules(GroupTable.cyclic(2)), rng=rng) <= 1e-7
    assert jacobian_check(fibonacci_rules(), rng=rng) <= 1e-7


def test_solve_trivial():
    calls = []
    results = solve_multiplicity_free(trivial_rules(), SolveOptions(starts=10), on_progress=lambda d, t: calls.append(d))
    assert calls == list(range(1, 11))
    best = results[0]
    assert best.converged
    assert best.invertible_total == 1
    assert best.solution.block(0, 0, 0, 0, 0, 0)[0, 0, 0, 0] == pytest.approx(1.0, abs=1e-6)
    assert check_all(best.solution, 1e-9).passed


def test_solve_is_deterministic():
    opts = SolveOptions(starts=5, seed=7)
    first = solve_multiplicity_free(trivial_rules(), opts, include_failed=True)
    second = solve_multiplicity_free(trivial_rules(), opts, include_failed=True)
    assert [r.start for r in first] == [r.start for r in second]
    assert [r.residual for r in first] == [r.residual for r in second]
    threaded = solve_multiplicity_free(trivial_rules(), SolveOptions(starts=5, seed=7, workers=2), include_failed=True)
    assert [r.residual for r in threaded] == [r.residual for r in first]


def test_unconverged_starts_are_reported():
    results = solve_multiplicity_free(trivial_rules(), SolveOptions(starts=3, max_iterations=1), include_failed=True)
    assert len(results) == 3
    assert not any(r.converged for r in results)
    assert [r.residual for r in results] == sorted(r.residual for r in results)
    assert solve_multiplicity_free(trivial_rules(), SolveOptions(starts=3, max_iterations=1)) == []


def test_invariants_of_pointed_classes(z2_nontrivial):
    invariants = gauge_invariants(z2_nontrivial)
    assert invariants.size > 0
    # the product of two opposite-charge blocks recovers ω(1, 1, 1)
    product = z2_nontrivial.block(1, 1, 1, 1, 0, 0) * z2_nontrivial.block(1, 0, 1, 0, 1, 1)
    assert np.any(np.isclose(invariants, product.item()))


def test_converged_results_are_invertible_and_not_shrunk():
    rules = pointed_rules(GroupTable.cyclic(2))
    results = solve_multiplicity_free(rules, SolveOptions(starts=10, seed=3), include_failed=True)
    converged = [r for r in results if r.converged]
    assert converged
    for result in converged:
        assert result.invertible_total == 8
        assert family_scale(result.solution) > 1e-3
        assert check_all(result.solution, 1e-9).passed


@pytest.mark.slow
def test_z2_solutions_fall_into_two_classes():
    rules = pointed_rules(GroupTable.cyclic(2))
    results = solve_multiplicity_free(rules, SolveOptions(starts=40))
    signs = set()
    assert results
    for result in results:
        assert result.invertible_total == 8
        sol = result.solution
        value = (sol.block(1, 1, 1, 1, 0, 0) * sol.block(1, 0, 1, 0, 1, 1)).item()
        assert min(abs(value - 1), abs(value + 1)) < 1e-6
        signs.add(int(np.sign(value.real)))
        assert check_all(sol, 1e-8).passed
    assert signs


@pytest.mark.slow
def test_fibonacci_fingerprint_is_stable(fibonacci):
    results = solve_multiplicity_free(fibonacci_rules(), SolveOptions(starts=20, seed=1))
    found = next(r for r in results if r.invertible_large)
    npt.assert_allclose(found.fingerprint, fingerprint(fibonacci), atol=1e-6)
