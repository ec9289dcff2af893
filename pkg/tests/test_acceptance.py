"""End-to-end properties: the four residual forms agree, known solutions pass, round trips are exact."""

import itertools
import json

import numpy as np
import numpy.testing as npt
import pytest
from click.testing import CliRunner

from conftest import PHI, random_rules, tuples_touching
from pentakit.builders import fibonacci_cross_ratio, fibonacci_rules, from_skeletal, pointed_solution, skeletal_from_cocycle, trivial_solution
from pentakit.cli import cli
from pentakit.cocycles import brute_force_cocycles, coboundary_matrix_3, enumerate_cocycles
from pentakit.core import assemble_matrix, random_solution
from pentakit.documents import loads_solution, dumps_solution, save_solution
from pentakit.groups import GroupTable, cocycle_cyclic, cocycle_identity_residual
from pentakit.normalized import WeightSystem, check_biedenharn_elliott, normalize
from pentakit.pentagon import boundary_tuples, check_all, inner_tuples, is_vacuous
from pentakit.solver import SolveOptions, balanced_magnitudes, jacobian_check, solve_multiplicity_free
from pentakit.tensor import GeneralTensor, Slot, check_all_tensor, check_pentagon_tensor, contract


def _values(report):
    return np.array(list(report.per_tuple.values()))


@pytest.mark.parametrize("seed", range(20))
def test_residual_forms_agree(seed):
    rng = np.random.default_rng(1000 + seed)
    rules = random_rules(rng)
    sol = random_solution(rules, rng)

    glob = check_all(sol, form="global", workers=1)
    comp = check_all(sol, form="component", workers=1)
    tens = check_all_tensor(sol, workers=1)
    assert glob.per_tuple.keys() == comp.per_tuple.keys() == tens.per_tuple.keys()
    scale = max(1.0, float(np.max(_values(glob), initial=0.0)))
    npt.assert_allclose(_values(glob), _values(comp), rtol=0, atol=1e-12 * scale)
    npt.assert_allclose(_values(comp), _values(tens), rtol=0, atol=1e-12 * scale)

    w = WeightSystem.random(rules, rng)
    family = normalize(sol, w)
    for t in boundary_tuples(rules):
        if is_vacuous(rules, t):
            continue
        for full in inner_tuples(rules, t):
            tensor = check_pentagon_tensor(sol, full)
            weighted = check_biedenharn_elliott(family, w, full) * abs(w[full.p] * w[full.q])
            assert abs(weighted - tensor) <= 1e-11 * max(1.0, tensor)


def test_known_solutions_pass():
    assert check_all(trivial_solution()).overall == 0.0
    for n in range(2, 7):
        group = GroupTable.cyclic(n)
        for k in range(n):
            report = check_all(pointed_solution(group, cocycle_cyclic(n, k)), tol=1e-12)
            assert report.passed, (n, k, report.overall)


def test_fibonacci_passes(fibonacci):
    assert check_all(fibonacci, tol=1e-9).passed
    assert check_all_tensor(fibonacci, tol=1e-9).passed


def _loop_contract(coords, primal, dual):
    rest = [i for i in range(coords.ndim) if i not in (primal, dual)]
    out = np.zeros(tuple(coords.shape[i] for i in rest), dtype=np.complex128)
    for index in itertools.product(*(range(coords.shape[i]) for i in rest)):
        total = 0j
        for k in range(coords.shape[primal]):
            full = [0] * coords.ndim
            for axis, value in zip(rest, index):
                full[axis] = value
            full[primal] = full[dual] = k
            total += coords[tuple(full)]
        out[index] = total
    return out


def _random_pair_tensor(rng, rank):
    """A tensor on ``rank`` slots holding one primal/dual pair of the module (0, 0, 0)."""
    dims = [int(d) for d in rng.integers(1, 5, rank)]
    primal, dual = (int(i) for i in rng.choice(rank, 2, replace=False))
    dims[dual] = dims[primal]
    slots = [Slot((1, 1, i), bool(rng.integers(2)), dims[i]) for i in range(rank)]
    slots[primal] = Slot((0, 0, 0), False, dims[primal])
    slots[dual] = Slot((0, 0, 0), True, dims[primal])
    coords = rng.normal(size=dims) + 1j * rng.normal(size=dims)
    return GeneralTensor(tuple(slots), coords), primal, dual


def test_contract_matches_nested_loops(rng):
    for _ in range(200):
        t, primal, dual = _random_pair_tensor(rng, int(rng.integers(2, 7)))
        out = contract(t, primal, dual)
        npt.assert_allclose(out.coords, _loop_contract(t.coords, primal, dual), rtol=0, atol=1e-14 * t.coords.size)


def test_contractions_commute(rng):
    first, second = (0, 0, 0), (0, 1, 1)
    for _ in range(100):
        n, m = (int(d) for d in rng.integers(1, 5, 2))
        order = rng.permutation(4)
        slots = [Slot(first, False, n), Slot(first, True, n), Slot(second, False, m), Slot(second, True, m)]
        slots = tuple(slots[i] for i in order)
        t = GeneralTensor(slots, rng.normal(size=tuple(s.dim for s in slots)))
        where = {(s.module, s.dual): i for i, s in enumerate(slots)}
        p1, d1 = where[first, False], where[first, True]
        p2, d2 = where[second, False], where[second, True]

        def shifted(i, removed):
            return i - sum(r < i for r in removed)

        one = contract(contract(t, p1, d1), shifted(p2, (p1, d1)), shifted(d2, (p1, d1)))
        two = contract(contract(t, p2, d2), shifted(p1, (p2, d2)), shifted(d1, (p2, d2)))
        assert one.rank == two.rank == 0
        assert abs(one.coords - two.coords) <= 1e-14 * max(1.0, n * m)


def test_enumeration_matches_exhaustive_search():
    found = enumerate_cocycles(2)
    d3 = coboundary_matrix_3(2)
    every = {table for table in itertools.product(range(2), repeat=8) if not np.any(d3 @ np.array(table) % 2)}
    classes = brute_force_cocycles(2)
    assert frozenset().union(*classes) == every
    assert len(classes) == found.order
    assert len({found.class_of(np.array(next(iter(coset)))) for coset in classes}) == len(classes)
    for coords in found.class_coords():
        table = tuple(found.exponents(coords).reshape(-1).tolist())
        coset = next(c for c in classes if table in c)
        assert {found.class_of(np.array(other)) for other in coset} == {coords}


@pytest.mark.parametrize("n", range(1, 7))
def test_representatives_are_cocycles(n):
    for omega in enumerate_cocycles(n).representatives:
        assert cocycle_identity_residual(omega.group, omega.values) <= 1e-12


@pytest.mark.slow
def test_solver_finds_fibonacci():
    results = solve_multiplicity_free(fibonacci_rules(), SolveOptions(starts=50, seed=0))
    assert results and min(r.residual for r in results) <= 1e-10
    good = [r for r in results if r.invertible_large]
    assert good
    for result in good[1:]:
        npt.assert_allclose(result.fingerprint, good[0].fingerprint, atol=1e-6)
    for result in good:
        m = assemble_matrix(result.solution.fmap(1, 1, 1, 1), result.solution.rules)
        npt.assert_allclose(
            np.sort(balanced_magnitudes(m).ravel()),
            np.sort([1 / PHI, 1 / PHI, PHI**-0.5, PHI**-0.5]),
            atol=1e-6,
        )
    for result in results:
        if result.converged:
            assert result.invertible_large
            assert fibonacci_cross_ratio(result.solution) is not None


def test_jacobian_on_random_points(rng):
    rules = fibonacci_rules()
    for _ in range(20):
        assert jacobian_check(rules, rng=rng) <= 1e-7


@pytest.mark.parametrize("n", [2, 3])
def test_skeletal_construction_matches_pointed(n):
    group = GroupTable.cyclic(n)
    for k in range(n):
        omega = cocycle_cyclic(n, k)
        built = from_skeletal(skeletal_from_cocycle(group, omega))
        expected = pointed_solution(group, omega)
        assert set(built.block_dict()) == set(expected.block_dict())
        for key, coords in expected.block_dict().items():
            npt.assert_allclose(built.block(*key), coords, rtol=0, atol=1e-14)
        assert check_all(built, tol=1e-10).passed


def _generated(fibonacci):
    yield trivial_solution()
    for n in range(2, 7):
        for k in range(n):
            yield pointed_solution(GroupTable.cyclic(n), cocycle_cyclic(n, k))
    yield fibonacci


def test_generated_solutions_round_trip_exactly(fibonacci):
    for sol in _generated(fibonacci):
        doc = loads_solution(dumps_solution(sol))
        assert doc.rules == sol.rules
        assert set(doc.blocks) == set(sol.block_dict())
        for key, coords in sol.block_dict().items():
            npt.assert_array_equal(doc.blocks[key], coords)


def test_cli_check_is_stable(tmp_path):
    runner = CliRunner()
    path = tmp_path / "z2.json"
    assert runner.invoke(cli, ["gen", "pointed", "--n", "2", "--k", "1", "-o", str(path)]).exit_code == 0
    runs = [runner.invoke(cli, ["check", str(path), "--report", "json"]) for _ in range(2)]
    assert [r.exit_code for r in runs] == [0, 0]
    reports = [json.loads(r.stdout) for r in runs]
    for report in reports:
        report.pop("wall_ms")
    assert reports[0] == reports[1]


def test_cli_names_worst_tuple_of_perturbed_fibonacci(tmp_path, fibonacci):
    key = (1, 1, 1, 1, 1, 1)
    coords = np.array(fibonacci.block(*key))
    coords[0, 0, 0, 0] += 0.01
    path = tmp_path / "broken.json"
    save_solution(fibonacci.replace_block(key, coords), path)

    runner = CliRunner()
    result = runner.invoke(cli, ["check", str(path), "--report", "json", "--tol", "1e-9"])
    assert result.exit_code == 1
    report = json.loads(result.stdout)
    assert report["overall"] > 1e-4
    assert report["worst"][0]["residual"] == report["overall"]
    assert len(report["worst"][0]["labels"]) == 5
    touching = tuples_touching(fibonacci.rules, key)
    assert tuple(report["worst"][0]["tuple"]) in touching
    assert all(entry["residual"] <= 1e-9 for entry in report["worst"] if tuple(entry["tuple"]) not in touching)

    result = runner.invoke(cli, ["check", str(path), "--tol", "1e-9"])
    assert result.exit_code == 1
    assert "Worst tuples" in result.output
    assert " ".join(report["worst"][0]["labels"]) in result.output
