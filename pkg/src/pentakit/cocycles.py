"""Exact enumeration of 3-cocycles on Z/n in exponent space.

A cocycle with values n-th roots of unity is ω = exp(2πi e / n) for an
exponent table e: (Z/n)^3 -> Z/n, and the multiplicative identity becomes
the linear condition δe = 0 over Z/n. Cohomology classes are cocycles
modulo coboundaries δf of 2-cochains f: (Z/n)^2 -> Z/n.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import InvalidCocycleError, RangeError
from .groups import Cocycle3, GroupTable, cyclic_exponents
from .smith import ModCokernel, ModKernel, cokernel_mod, invariant_factors, kernel_mod, normalize_rows

log = logging.getLogger(__name__)

MAX_ORDER = 12
BRUTE_FORCE_LIMIT = 1 << 20


def coboundary_matrix_3(n: int) -> np.ndarray:
    """δ on 3-cochains: one row per (a, b, c, d), one column per (a, b, c), entries mod n.

    (δe)(a,b,c,d) = e(b,c,d) - e(a+b,c,d) + e(a,b+c,d) - e(a,b,c+d) + e(a,b,c).
    """
    a, b, c, d = (v.ravel() for v in np.meshgrid(*(np.arange(n),) * 4, indexing="ij"))
    rows = np.arange(n**4)

    def idx(i, j, k):
        return (i % n) * n * n + (j % n) * n + (k % n)

    matrix = np.zeros((n**4, n**3), dtype=np.int64)
    for sign, column in (
        (1, idx(b, c, d)),
        (-1, idx(a + b, c, d)),
        (1, idx(a, b + c, d)),
        (-1, idx(a, b, c + d)),
        (1, idx(a, b, c)),
    ):
        np.add.at(matrix, (rows, column), sign)
    return matrix % n


def coboundary_matrix_2(n: int) -> np.ndarray:
    """δ on 2-cochains: (δf)(a,b,c) = f(b,c) - f(a+b,c) + f(a,b+c) - f(a,b)."""
    a, b, c = (v.ravel() for v in np.meshgrid(*(np.arange(n),) * 3, indexing="ij"))
    rows = np.arange(n**3)
    matrix = np.zeros((n**3, n**2), dtype=np.int64)
    for sign, column in (
        (1, (b % n) * n + c),
        (-1, ((a + b) % n) * n + c),
        (1, a * n + (b + c) % n),
        (-1, a * n + b),
    ):
        np.add.at(matrix, (rows, column), sign)
    return matrix % n


@dataclass(frozen=True, eq=False)
class CocycleSolutionSet:
    """Cohomology classes of Z/n 3-cocycles with Z/n exponents.

    ``basis`` holds one exponent table per cyclic factor of the class group,
    ``orders`` the factor orders; every class is Σ k_i basis_i with
    0 <= k_i < orders_i.
    """

    n: int
    basis: tuple[np.ndarray, ...]
    orders: tuple[int, ...]
    kernel: ModKernel
    cokernel: ModCokernel

    @property
    def group(self) -> GroupTable:
        return GroupTable.cyclic(self.n)

    @property
    def order(self) -> int:
        """Number of cohomology classes."""
        out = 1
        for m in self.orders:
            out *= m
        return out

    @property
    def invariant_factors(self) -> tuple[int, ...]:
        return invariant_factors(self.orders)

    def exponents(self, coords: tuple[int, ...]) -> np.ndarray:
        table = np.zeros((self.n,) * 3, dtype=np.int64)
        for k, generator in zip(coords, self.basis):
            table = (table + k * generator) % self.n
        return table

    def class_of(self, exponents: np.ndarray) -> tuple[int, ...]:
        """Class coordinates of a cocycle's exponent table."""
        x = np.asarray(exponents, dtype=np.int64).reshape(-1) % self.n
        if x.shape != (self.n**3,):
            raise InvalidCocycleError(f"exponent table must have {self.n ** 3} entries")
        try:
            coords = self.kernel.coordinates(x)
        except ValueError:
            raise InvalidCocycleError("exponent table does not satisfy the cocycle condition") from None
        return self.cokernel.project(coords)

    def class_coords(self) -> Iterator[tuple[int, ...]]:
        yield from itertools.product(*(range(m) for m in self.orders))

    @property
    def representatives(self) -> list[Cocycle3]:
        group = self.group
        return [Cocycle3.from_exponents(group, self.exponents(c), self.n) for c in self.class_coords()]

    def matching(self, k: int) -> Cocycle3:
        """The representative cohomologous to cocycle_cyclic(n, k)."""
        coords = self.class_of(cyclic_exponents(self.n, k % self.n))
        return Cocycle3.from_exponents(self.group, self.exponents(coords), self.n)


def enumerate_cocycles(n: int) -> CocycleSolutionSet:
    if not 1 <= n <= MAX_ORDER:
        raise RangeError(f"cyclic order must be in 1..{MAX_ORDER}, got {n}")
    d3 = normalize_rows(coboundary_matrix_3(n), n)
    kernel = kernel_mod(d3, n)

    # Coboundaries in kernel coordinates, then the class group as a cokernel.
    d2 = coboundary_matrix_2(n)
    if kernel.orders:
        images = np.stack([kernel.coordinates(column) for column in d2.T], axis=1)
        relations = np.concatenate([images, np.diag(kernel.orders)], axis=1)
    else:
        relations = np.zeros((0, 0), dtype=np.int64)
    cokernel = cokernel_mod(relations, n)

    basis = tuple(kernel.element(generator).reshape((n,) * 3) for generator in cokernel.generators.T)
    log.debug("Z/%d: %d cocycle factors, classes %s", n, len(kernel.orders), cokernel.orders)
    return CocycleSolutionSet(n, basis, cokernel.orders, kernel, cokernel)


def brute_force_cocycles(n: int) -> list[frozenset[tuple[int, ...]]]:
    """All cocycle exponent tables, grouped into cohomology classes, by exhaustion."""
    if n**(n**3) > BRUTE_FORCE_LIMIT:
        raise RangeError(f"brute force over {n}^{n ** 3} tables is out of reach")
    d3 = coboundary_matrix_3(n)
    d2 = coboundary_matrix_2(n)
    cocycles = [
        table
        for table in itertools.product(range(n), repeat=n**3)
        if not np.any(d3 @ np.array(table) % n)
    ]
    images = {
        tuple((d2 @ np.array(f) % n).tolist())
        for f in itertools.product(range(n), repeat=n**2)
    }
    boundaries = [np.array(image) for image in sorted(images)]
    classes: list[frozenset[tuple[int, ...]]] = []
    seen: set[tuple[int, ...]] = set()
    for table in cocycles:
        if table in seen:
            continue
        coset = frozenset(tuple(((np.array(table) + b) % n).tolist()) for b in boundaries)
        seen.update(coset)
        classes.append(coset)
    return classes
