"""Finite groups by multiplication table, multiplicative 3-cocycles, and the cyclic family."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, InvalidCocycleError, InvalidGroupError

log = logging.getLogger(__name__)

COCYCLE_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class GroupTable:
    """A finite group on 0..n-1; ``mul[g, h]`` is the product g·h."""

    mul: np.ndarray
    identity: int = field(init=False)
    inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        mul = np.asarray(self.mul)
        if mul.ndim != 2 or mul.shape[0] != mul.shape[1] or mul.shape[0] == 0:
            raise InvalidGroupError(f"multiplication table must be square and nonempty, got {mul.shape}")
        n = mul.shape[0]
        if not np.issubdtype(mul.dtype, np.integer) or mul.min() < 0 or mul.max() >= n:
            raise InvalidGroupError(f"table entries must be elements 0..{n - 1}")
        mul = mul.astype(np.int64)
        mul.setflags(write=False)
        object.__setattr__(self, "mul", mul)

        r = np.arange(n)
        identities = [e for e in r if np.array_equal(mul[e], r) and np.array_equal(mul[:, e], r)]
        if not identities:
            raise InvalidGroupError("table has no identity element")
        identity = int(identities[0])

        inverse = np.full(n, -1, dtype=np.int64)
        for g in range(n):
            found = np.nonzero(mul[g] == identity)[0]
            if len(found) != 1 or mul[found[0], g] != identity:
                raise InvalidGroupError(f"element {g} has no two-sided inverse")
            inverse[g] = found[0]
        inverse.setflags(write=False)

        # (gh)k == g(hk) for all triples
        left = mul[mul[:, :, None], r[None, None, :]]
        right = mul[r[:, None, None], mul[None, :, :]]
        if not np.array_equal(left, right):
            g, h, k = (int(v[0]) for v in np.nonzero(left != right))
            raise InvalidGroupError(f"table is not associative at ({g}, {h}, {k})")

        object.__setattr__(self, "identity", identity)
        object.__setattr__(self, "inverse", inverse)

    @classmethod
    def cyclic(cls, n: int) -> GroupTable:
        if n < 1:
            raise InvalidGroupError(f"cyclic group order must be positive, got {n}")
        r = np.arange(n)
        return cls((r[:, None] + r[None, :]) % n)

    @classmethod
    def product(cls, g: GroupTable, h: GroupTable) -> GroupTable:
        """Direct product; the pair (i, j) is element i * |h| + j."""
        m = h.order
        mul = np.empty((g.order * m, g.order * m), dtype=np.int64)
        for (i1, j1), (i2, j2) in itertools.product(
            itertools.product(range(g.order), range(m)), repeat=2
        ):
            mul[i1 * m + j1, i2 * m + j2] = g.mul[i1, i2] * m + h.mul[j1, j2]
        return cls(mul)

    @property
    def order(self) -> int:
        return int(self.mul.shape[0])

    @property
    def abelian(self) -> bool:
        return bool(np.array_equal(self.mul, self.mul.T))

    def __call__(self, g: int, h: int) -> int:
        return int(self.mul[g, h])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroupTable):
            return NotImplemented
        return np.array_equal(self.mul, other.mul)

    def __hash__(self) -> int:
        return hash(self.mul.tobytes())


def cocycle_identity_residual(group: GroupTable, values: np.ndarray) -> float:
    """Max over (a, b, c, d) of |ω(b,c,d) ω(a,bc,d) ω(a,b,c) - ω(ab,c,d) ω(a,b,cd)|."""
    w = np.asarray(values, dtype=np.complex128)
    n = group.order
    m = group.mul
    a, b, c, d = np.meshgrid(*(np.arange(n),) * 4, indexing="ij")
    lhs = w[b, c, d] * w[a, m[b, c], d] * w[a, b, c]
    rhs = w[m[a, b], c, d] * w[a, b, m[c, d]]
    return float(np.max(np.abs(lhs - rhs)))


@dataclass(frozen=True, eq=False)
class Cocycle3:
    """Nonzero values ω(a, b, c) satisfying the multiplicative 3-cocycle identity."""

    group: GroupTable
    values: np.ndarray

    def __post_init__(self) -> None:
        n = self.group.order
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != (n, n, n):
            raise InvalidCocycleError(f"cocycle values must have shape {(n, n, n)}, got {values.shape}")
        if not np.all(np.isfinite(values)) or np.any(np.abs(values) < 1e-15):
            raise InvalidCocycleError("cocycle values must be finite and nonzero")
        residual = cocycle_identity_residual(self.group, values)
        if residual > COCYCLE_TOLERANCE:
            raise InvalidCocycleError(f"3-cocycle identity fails, residual {residual:.3e}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def trivial(cls, group: GroupTable) -> Cocycle3:
        n = group.order
        return cls(group, np.ones((n, n, n)))

    @classmethod
    def from_exponents(cls, group: GroupTable, exponents: np.ndarray, modulus: int | None = None) -> Cocycle3:
        """ω = exp(2πi e / m) for an exponent table e over Z/m (m defaults to the group order)."""
        m = modulus or group.order
        e = np.asarray(exponents, dtype=np.int64) % m
        return cls(group, np.exp(2j * np.pi * e / m))

    def __call__(self, a: int, b: int, c: int) -> complex:
        return complex(self.values[a, b, c])


def cyclic_exponents(n: int, k: int) -> np.ndarray:
    """e(a, b, c) = k a ⌊(b + c) / n⌋ mod n."""
    r = np.arange(n)
    a, b, c = np.meshgrid(r, r, r, indexing="ij")
    return (k * a * ((b + c) // n)) % n


def cocycle_cyclic(n: int, k: int) -> Cocycle3:
    """ω(a, b, c) = exp(2πi k a ⌊(b + c)/n⌋ / n) on Z/n."""
    group = GroupTable.cyclic(n)
    try:
        return Cocycle3.from_exponents(group, cyclic_exponents(n, k % n), n)
    except InvalidCocycleError as exc:
        raise ConstructionError(f"cyclic cocycle n={n} k={k} failed verification: {exc}") from exc


def coboundary(group: GroupTable, f: np.ndarray) -> np.ndarray:
    """δf(a, b, c) = f(b, c) f(a, bc) / (f(ab, c) f(a, b)) for a nonzero 2-cochain f."""
    f = np.asarray(f, dtype=np.complex128)
    n = group.order
    m = group.mul
    a, b, c = np.meshgrid(*(np.arange(n),) * 3, indexing="ij")
    return f[b, c] * f[a, m[b, c]] / (f[m[a, b], c] * f[a, b])
