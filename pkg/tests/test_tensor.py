import numpy as np
import numpy.testing as npt
import pytest

from pentakit.core import block_apply, random_solution
from pentakit.errors import ContractionPairError, ShapeError
from pentakit.models import FBlock
from pentakit.pentagon import PentagonTuple, boundary_tuples, check_all, inner_tuples, is_vacuous, lhs_component, rhs_component
from pentakit.tensor import (
    LHS_PAIRS,
    GeneralTensor,
    Slot,
    check_all_tensor,
    check_pentagon_tensor,
    contract,
    contract_pairs,
    from_tensor,
    lhs_tensor,
    rhs_tensor,
    tensor_product,
    to_tensor,
    to_vector,
    vector_apply,
)

from conftest import random_rules


@pytest.fixture
def block(rng):
    labels = (0, 1, 1, 0, 1, 0)
    return FBlock(labels, rng.normal(size=(2, 3, 1, 2)) + 1j * rng.normal(size=(2, 3, 1, 2)))


def test_tensor_and_vector_slots(block):
    tensor = to_tensor(block)
    vector = to_vector(block)
    assert [s.dual for s in tensor.slots] == [False, False, True, True]
    assert [s.dual for s in vector.slots] == [True, True, False, False]
    assert [s.module for s in tensor.slots] == [(1, 1, 0), (0, 1, 1), (0, 0, 0), (1, 1, 0)]
    assert [s.dim for s in tensor.slots] == [2, 3, 1, 2]
    npt.assert_array_equal(from_tensor(tensor).coords, block.coords)
    assert from_tensor(vector).labels == block.labels


def test_general_tensor_shape_check():
    with pytest.raises(ShapeError):
        GeneralTensor((Slot((0, 0, 0), False, 2),), np.ones(3))
    assert GeneralTensor.scalar(2.0).rank == 0


def test_contract_is_a_trace(rng):
    m = (0, 0, 0)
    slots = (Slot(m, False, 3), Slot((1, 0, 1), False, 2), Slot(m, True, 3))
    coords = rng.normal(size=(3, 2, 3))
    out = contract(GeneralTensor(slots, coords), 0, 2)
    assert out.slots == (Slot((1, 0, 1), False, 2),)
    npt.assert_allclose(out.coords, np.einsum("iji->j", coords))


@pytest.mark.parametrize(
    "slots, pair",
    [
        ((Slot((0, 0, 0), False, 2), Slot((0, 0, 0), False, 2)), (0, 1)),
        ((Slot((0, 0, 0), True, 2), Slot((0, 0, 0), True, 2)), (0, 1)),
        ((Slot((0, 0, 0), False, 2), Slot((0, 0, 1), True, 2)), (0, 1)),
        ((Slot((0, 0, 0), False, 2), Slot((0, 0, 0), True, 2)), (0, 0)),
        ((Slot((0, 0, 0), False, 2), Slot((0, 0, 0), True, 2)), (0, 2)),
    ],
)
def test_contract_rejects_bad_pairs(slots, pair):
    t = GeneralTensor(slots, np.ones(tuple(s.dim for s in slots)))
    with pytest.raises(ContractionPairError):
        contract(t, *pair)


def test_contract_pairs_rejects_reused_slot():
    m = (0, 0, 0)
    slots = (Slot(m, False, 1), Slot(m, True, 1), Slot(m, True, 1))
    with pytest.raises(ContractionPairError):
        contract_pairs(GeneralTensor(slots, np.ones((1, 1, 1))), [(0, 1), (0, 2)])


def test_vector_apply_matches_block_apply(block, rng):
    alpha = rng.normal(size=(2, 3))
    out = vector_apply(to_vector(block), alpha)
    assert [s.module for s in out.slots] == [(0, 0, 0), (1, 1, 0)]
    assert not any(s.dual for s in out.slots)
    npt.assert_allclose(out.coords, block_apply(block, alpha))


def test_contraction_order_does_not_matter(rng):
    rules = random_rules(np.random.default_rng(3), max_size=2, max_dim=2)
    sol = random_solution(rules, rng)
    for t in boundary_tuples(rules):
        for full in inner_tuples(rules, t):
            a, b, c, d, e = full.boundary
            x, y, p, q = full.inner
            for z in range(rules.size):
                keys = [(b, c, d, p, z, q), (a, z, d, e, y, p), (a, b, c, y, x, z)]
                if any(sol.block(*k) is None for k in keys):
                    continue
                tensors = [to_tensor(FBlock(k, sol.block(*k))).general for k in keys]
                product = tensor_product(tensor_product(tensors[0], tensors[1]), tensors[2])
                forward = contract_pairs(product, LHS_PAIRS)
                backward = contract_pairs(product, LHS_PAIRS[::-1])
                assert forward.slots == backward.slots
                npt.assert_allclose(forward.coords, backward.coords, atol=1e-12)
                return
    pytest.skip("no inner tuple with all three left-side blocks")


@pytest.mark.parametrize("seed", range(4))
def test_tensor_sides_match_component_matrices(seed):
    rng = np.random.default_rng(seed)
    rules = random_rules(rng, max_size=2, max_dim=2)
    sol = random_solution(rules, rng)
    for t in boundary_tuples(rules):
        if is_vacuous(rules, t):
            continue
        for full in inner_tuples(rules, t):
            lhs = lhs_tensor(sol, full).coords
            rhs = rhs_tensor(sol, full).coords
            n_in = int(np.prod(lhs.shape[:3]))
            npt.assert_allclose(lhs.reshape(n_in, -1).T, lhs_component(sol, full), atol=1e-12)
            npt.assert_allclose(rhs.reshape(n_in, -1).T, rhs_component(sol, full), atol=1e-12)


def test_tensor_sweep_matches_component_sweep(z3_k1, rng):
    rules = random_rules(np.random.default_rng(11), max_size=2, max_dim=2)
    sol = random_solution(rules, rng)
    tensor = check_all_tensor(sol, workers=1)
    component = check_all(sol, form="component", workers=1)
    assert tensor.per_tuple.keys() == component.per_tuple.keys()
    npt.assert_allclose(list(tensor.per_tuple.values()), list(component.per_tuple.values()), rtol=1e-9, atol=1e-12)
    assert check_all_tensor(z3_k1, workers=1).passed


def test_tensor_check_of_trivial(trivial):
    assert check_pentagon_tensor(trivial, PentagonTuple(0, 0, 0, 0, 0)) == 0.0
