import itertools

import numpy as np
import pytest

from pentakit.builders import fibonacci_solution, pointed_solution, trivial_solution
from pentakit.groups import GroupTable, cocycle_cyclic
from pentakit.models import FusionRules

PHI = (1 + 5**0.5) / 2


def random_rules(rng: np.random.Generator, max_size: int = 3, max_dim: int = 3) -> FusionRules:
    """Random dimension table; roughly half of the entries are zero so sweeps stay small."""
    size = int(rng.integers(1, max_size + 1))
    choices = [0, 0, 0] + list(range(1, max_dim + 1))
    dims = rng.choice(choices, size=(size, size, size))
    if not dims.any():
        dims[0, 0, 0] = 1
    return FusionRules(dims)


def symmetric_group_3() -> GroupTable:
    perms = list(itertools.permutations(range(3)))
    mul = np.array([[perms.index(tuple(g[h[i]] for i in range(3))) for h in perms] for g in perms])
    return GroupTable(mul)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def trivial():
    return trivial_solution()


@pytest.fixture
def z2_nontrivial():
    return pointed_solution(GroupTable.cyclic(2), cocycle_cyclic(2, 1))


@pytest.fixture
def z3_k1():
    return pointed_solution(GroupTable.cyclic(3), cocycle_cyclic(3, 1))


@pytest.fixture(scope="session")
def fibonacci_cache(tmp_path_factory):
    directory = tmp_path_factory.mktemp("fibonacci-cache")
    fibonacci_solution(directory)
    return directory


@pytest.fixture(scope="session")
def fibonacci(fibonacci_cache):
    return fibonacci_solution(fibonacci_cache)


def tuples_touching(rules: FusionRules, key: tuple[int, ...]) -> set[tuple[int, ...]]:
    """Boundary tuples (a, b, c, d, e) whose component equations contain the block ``key``."""
    r = range(rules.size)
    found = set()
    for a, b, c, d, e, x, y, p, q, z in itertools.product(r, repeat=10):
        used = ((a, b, c, y, x, z), (a, z, d, e, y, p), (b, c, d, p, z, q), (x, c, d, e, y, q), (a, b, q, e, x, p))
        if key in used:
            found.add((a, b, c, d, e))
    return found
