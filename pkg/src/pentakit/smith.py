"""Linear algebra over Z/n: two-sided diagonalization, kernels and cokernels.

Z/n has zero divisors once n is composite, so Gaussian elimination is
replaced by a Smith-style reduction: pivots are normalized to divisors of n
by unit scaling, entries a pivot does not divide are merged into it with a
unimodular 2x2 (Bezout) step, and the pivot shrinks until it divides its
whole row and column.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import RangeError

log = logging.getLogger(__name__)

COMPACT_EVERY = 32
PIVOT_CANDIDATES = 64


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (s, t, d) with d = gcd(a, b) and s*a + t*b = d."""
    s0, t0, s1, t1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    return s0, t0, a


@lru_cache(maxsize=None)
def _normalizers(n: int) -> tuple[int, ...]:
    """For every residue p, a unit u with u*p = gcd(p, n) mod n."""
    units = [u for u in range(1, n + 1) if math.gcd(u, n) == 1]
    table = []
    for p in range(n):
        g = math.gcd(p, n) % n
        table.append(next(u % n for u in units if (u * p) % n == g))
    return tuple(table)


def normalize_rows(matrix: np.ndarray, n: int) -> np.ndarray:
    """Rows scaled by units so each leading entry divides n, without zero or repeated rows.

    Unit scaling and dropping rows that repeat keep the row span, hence the kernel.
    """
    a = np.asarray(matrix, dtype=np.int64) % n
    a = a[np.any(a, axis=1)]
    if len(a) == 0:
        return a
    leading = a[np.arange(len(a)), np.argmax(a != 0, axis=1)]
    units = np.asarray(_normalizers(n), dtype=np.int64)[leading]
    return np.unique(a * units[:, None] % n, axis=0)


@dataclass(frozen=True, eq=False)
class ModDiagonalization:
    """U A V = D (mod n) with D diagonal; U and V invertible over Z/n.

    ``U``/``U_inv`` are only tracked on request (large coefficient matrices
    only need the column side).
    """

    modulus: int
    shape: tuple[int, int]
    diagonal: tuple[int, ...]
    V: np.ndarray
    V_inv: np.ndarray
    U: np.ndarray | None = None
    U_inv: np.ndarray | None = None

    def entry(self, i: int) -> int:
        """i-th diagonal entry; zero beyond the pivots found."""
        return self.diagonal[i] if i < len(self.diagonal) else 0

    def order(self, i: int) -> int:
        """gcd(d_i, n); gcd(0, n) = n."""
        return math.gcd(self.entry(i), self.modulus)


def _find_pivot(a: np.ndarray, t: int, n: int) -> tuple[int, int] | None:
    """A unit in column t (in the sparsest candidate row) if there is one, else a nonzero entry of least gcd with n."""
    column = a[t:, t]
    units = np.flatnonzero((column != 0) & (np.gcd(column, n) == 1))[:PIVOT_CANDIDATES]
    if len(units):
        weight = np.count_nonzero(a[t + units, t:], axis=1)
        return t + int(units[np.argmin(weight)]), t
    nz_rows, nz_cols = np.nonzero(a[t:, t:])
    if len(nz_rows) == 0:
        return None
    k = int(np.argmin(np.gcd(a[t:, t:][nz_rows, nz_cols], n)))
    return t + int(nz_rows[k]), t + int(nz_cols[k])


def diagonalize_mod(matrix: np.ndarray, n: int, track_rows: bool = False) -> ModDiagonalization:
    if n < 1:
        raise RangeError(f"modulus must be positive, got {n}")
    a = np.array(matrix, dtype=np.int64) % n
    rows, cols = a.shape
    v = np.eye(cols, dtype=np.int64)
    v_inv = np.eye(cols, dtype=np.int64)
    u = np.eye(rows, dtype=np.int64) if track_rows else None
    u_inv = np.eye(rows, dtype=np.int64) if track_rows else None
    normal = _normalizers(n)
    diagonal: list[int] = []

    def swap_rows(i: int, j: int) -> None:
        if i == j:
            return
        a[[i, j]] = a[[j, i]]
        if track_rows:
            u[[i, j]] = u[[j, i]]
            u_inv[:, [i, j]] = u_inv[:, [j, i]]

    def swap_cols(i: int, j: int) -> None:
        if i == j:
            return
        a[:, [i, j]] = a[:, [j, i]]
        v[:, [i, j]] = v[:, [j, i]]
        v_inv[[i, j]] = v_inv[[j, i]]

    t = 0
    while t < min(a.shape[0], cols):
        if not track_rows and t % COMPACT_EVERY == 0 and a.shape[0] - t > cols:
            # rows zero from t on stay zero; without U they can go
            live = t + np.flatnonzero(np.any(a[t:, t:], axis=1))
            a = np.concatenate([a[:t], a[live]])
        pivot = _find_pivot(a, t, n)
        if pivot is None:
            break
        swap_rows(t, pivot[0])
        swap_cols(t, pivot[1])

        while True:
            unit = normal[int(a[t, t])]
            if unit != 1:
                a[t] = a[t] * unit % n
                if track_rows:
                    u[t] = u[t] * unit % n
                    u_inv[:, t] = u_inv[:, t] * pow(unit, -1, n) % n
            g = int(a[t, t])
            if _clear_column(a, t, g, n, u, u_inv) and _clear_row(a, t, g, n, v, v_inv):
                break
        diagonal.append(int(a[t, t]))
        t += 1

    log.debug("diagonalized %dx%d matrix mod %d: %d pivots", rows, cols, n, len(diagonal))
    return ModDiagonalization(n, (rows, cols), tuple(diagonal), v, v_inv, u, u_inv)


def _clear_column(a, t, g, n, u, u_inv) -> bool:
    """Zero column t below the pivot; False if a Bezout step changed the pivot."""
    below = np.nonzero(a[t + 1:, t])[0] + t + 1
    if len(below) == 0:
        return True
    q = a[below, t]
    divisible = below[q % g == 0]
    if len(divisible):
        f = a[divisible, t] // g
        a[divisible] = (a[divisible] - f[:, None] * a[t]) % n
        if u is not None:
            u[divisible] = (u[divisible] - f[:, None] * u[t]) % n
            u_inv[:, t] = (u_inv[:, t] + u_inv[:, divisible] @ f) % n
    rest = below[q % g != 0]
    if len(rest) == 0:
        return True
    i = int(rest[0])
    q = int(a[i, t])
    s, r, h = egcd(g, q)
    gh, qh = g // h, q // h
    row_t, row_i = a[t].copy(), a[i].copy()
    a[t] = (s * row_t + r * row_i) % n
    a[i] = (-qh * row_t + gh * row_i) % n
    if u is not None:
        ut, ui = u[t].copy(), u[i].copy()
        u[t] = (s * ut + r * ui) % n
        u[i] = (-qh * ut + gh * ui) % n
        ct, ci = u_inv[:, t].copy(), u_inv[:, i].copy()
        u_inv[:, t] = (gh * ct + qh * ci) % n
        u_inv[:, i] = (-r * ct + s * ci) % n
    return False


def _clear_row(a, t, g, n, v, v_inv) -> bool:
    """Zero row t right of the pivot; False if a Bezout step changed the pivot.

    Called once column t is clear below the pivot.
    """
    right = np.nonzero(a[t, t + 1:])[0] + t + 1
    if len(right) == 0:
        return True
    q = a[t, right]
    divisible = right[q % g == 0]
    if len(divisible):
        f = a[t, divisible] // g
        # column t is zero off the pivot here, so only row t changes
        a[t, divisible] = (a[t, divisible] - g * f) % n
        v[:, divisible] = (v[:, divisible] - np.outer(v[:, t], f)) % n
        v_inv[t] = (v_inv[t] + f @ v_inv[divisible]) % n
    rest = right[q % g != 0]
    if len(rest) == 0:
        return True
    j = int(rest[0])
    q = int(a[t, j])
    s, r, h = egcd(g, q)
    gh, qh = g // h, q // h
    col_t, col_j = a[:, t].copy(), a[:, j].copy()
    a[:, t] = (s * col_t + r * col_j) % n
    a[:, j] = (-qh * col_t + gh * col_j) % n
    vt, vj = v[:, t].copy(), v[:, j].copy()
    v[:, t] = (s * vt + r * vj) % n
    v[:, j] = (-qh * vt + gh * vj) % n
    wt, wj = v_inv[t].copy(), v_inv[j].copy()
    v_inv[t] = (gh * wt + qh * wj) % n
    v_inv[j] = (-r * wt + s * wj) % n
    return False


@dataclass(frozen=True, eq=False)
class ModKernel:
    """ker(A) over Z/n as a direct sum of cyclic groups Z/g_i with generators."""

    modulus: int
    generators: np.ndarray  # one generator per column
    orders: tuple[int, ...]
    multipliers: tuple[int, ...]  # n / g_i
    columns: tuple[int, ...]  # index i of each factor in the diagonalization
    V_inv: np.ndarray

    def coordinates(self, x: np.ndarray) -> np.ndarray:
        """Coordinates of a kernel element, each modulo its factor order."""
        y = (self.V_inv @ (np.asarray(x, dtype=np.int64) % self.modulus)) % self.modulus
        picked = y[list(self.columns)]
        m = np.asarray(self.multipliers, dtype=np.int64)
        coords = (picked // m) % np.asarray(self.orders, dtype=np.int64)
        if np.any(picked % m) or np.any(self.element(coords) != np.asarray(x) % self.modulus):
            raise ValueError("vector is not in the kernel")
        return coords

    def element(self, coords: np.ndarray) -> np.ndarray:
        return (self.generators @ np.asarray(coords, dtype=np.int64)) % self.modulus

    @property
    def size(self) -> int:
        return math.prod(self.orders)


def _kernel(matrix: np.ndarray, n: int) -> ModKernel:
    diag = diagonalize_mod(matrix, n)
    cols = diag.shape[1]
    generators, orders, multipliers, picked = [], [], [], []
    for i in range(cols):
        g = diag.order(i)
        if g == 1:
            continue
        m = n // g
        generators.append(m * diag.V[:, i] % n)
        orders.append(g)
        multipliers.append(m)
        picked.append(i)
    gens = np.array(generators, dtype=np.int64).T if generators else np.zeros((cols, 0), dtype=np.int64)
    return ModKernel(n, gens, tuple(orders), tuple(multipliers), tuple(picked), diag.V_inv)


def kernel_mod(matrix: np.ndarray, n: int, batch: int | None = None) -> ModKernel:
    """ker(A) over Z/n.

    A matrix with more than ``batch`` rows (default twice its columns) is
    diagonalized on a spread-out subset of rows first; rows that do not vanish
    on that kernel are added, ``batch`` at a time, until every row does.
    """
    a = np.asarray(matrix, dtype=np.int64) % n
    rows, cols = a.shape
    batch = batch or 2 * cols
    if rows <= batch:
        return _kernel(a, n)
    chosen = np.zeros(rows, dtype=bool)
    chosen[np.linspace(0, rows - 1, batch).astype(np.int64)] = True
    while True:
        kernel = _kernel(a[chosen], n)
        if not kernel.orders:
            return kernel
        rest = np.flatnonzero(~chosen)
        # entries stay below n^2 * cols, exact in float64
        images = np.rint(a[rest].astype(np.float64) @ kernel.generators.astype(np.float64))
        bad = rest[np.any(images.astype(np.int64) % n, axis=1)]
        if len(bad) == 0:
            return kernel
        log.debug("kernel mod %d: %d of %d rows used, %d more needed", n, int(chosen.sum()), rows, len(bad))
        chosen[bad[:batch]] = True


@dataclass(frozen=True, eq=False)
class ModCokernel:
    """(Z/n)^k / im(A) as a direct sum of cyclic groups, with the projection onto it."""

    modulus: int
    generators: np.ndarray  # columns of U^-1, one per nontrivial factor
    orders: tuple[int, ...]
    rows: tuple[int, ...]
    U: np.ndarray

    def project(self, x: np.ndarray) -> tuple[int, ...]:
        y = (self.U @ (np.asarray(x, dtype=np.int64) % self.modulus)) % self.modulus
        return tuple(int(y[i] % g) for i, g in zip(self.rows, self.orders))


def cokernel_mod(matrix: np.ndarray, n: int) -> ModCokernel:
    matrix = np.asarray(matrix, dtype=np.int64)
    diag = diagonalize_mod(matrix, n, track_rows=True)
    generators, orders, rows = [], [], []
    for i in range(diag.shape[0]):
        g = diag.order(i)
        if g == 1:
            continue
        generators.append(diag.U_inv[:, i])
        orders.append(g)
        rows.append(i)
    k = diag.shape[0]
    gens = np.array(generators, dtype=np.int64).T if generators else np.zeros((k, 0), dtype=np.int64)
    return ModCokernel(n, gens, tuple(orders), tuple(rows), diag.U)


def _prime_powers(m: int) -> dict[int, int]:
    out: dict[int, int] = {}
    p = 2
    while p * p <= m:
        while m % p == 0:
            out[p] = out.get(p, 1) * p
            m //= p
        p += 1
    if m > 1:
        out[m] = out.get(m, 1) * m
    return out


def invariant_factors(orders: list[int] | tuple[int, ...]) -> tuple[int, ...]:
    """Invariant factors d_1 | d_2 | ... of ⊕ Z/m_i, dropping trivial factors."""
    by_prime: dict[int, list[int]] = {}
    for m in orders:
        for p, power in _prime_powers(int(m)).items():
            by_prime.setdefault(p, []).append(power)
    if not by_prime:
        return ()
    length = max(len(v) for v in by_prime.values())
    factors = [1] * length
    for powers in by_prime.values():
        for i, power in enumerate(sorted(powers, reverse=True)):
            factors[length - 1 - i] *= power
    return tuple(factors)
