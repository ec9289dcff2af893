"""Damped least-squares search for multiplicity-free pentagon solutions.

Every block is a single complex unknown f_k. For every inner tuple whose six
outer modules are one-dimensional the component form gives one equation

    Σ_z f(abc y; x z) f(azd e; y p) f(bcd p; z q) - f(xcd e; y q) f(abq e; x p) = 0,

a polynomial of degree at most three. The zero family solves all of them, so
every square F-map M also gets an auxiliary unknown w_M and the equation

    det(M) w_M - 1 = 0,

which only invertible maps can satisfy. Real and imaginary parts are solved as
independent real unknowns with a Levenberg-Marquardt iteration from several
seeded random starts.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import assemble_matrix, map_keys
from .errors import RangeError, UnsupportedRulesError
from .models import BlockKey, FSolution, FusionRules
from .pentagon import boundary_tuples, inner_tuples, is_vacuous

log = logging.getLogger(__name__)

RESIDUAL_FLOOR = 1e-14
INVERTIBLE_CONDITION = 1e8
RELATIVE_FLOOR = 1e-8


@dataclass(frozen=True)
class SolveOptions:
    max_iterations: int = 200
    residual_target: float = 1e-10
    damping: float = 1e-3
    damping_up: float = 3.0
    damping_down: float = 2.0
    starts: int = 50
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        for name in ("max_iterations", "residual_target", "damping", "damping_up", "damping_down", "starts", "workers"):
            if not getattr(self, name) > 0:
                raise RangeError(f"{name} must be positive, got {getattr(self, name)}")
        if self.residual_target < RESIDUAL_FLOOR:
            raise RangeError(f"residual_target {self.residual_target} is below {RESIDUAL_FLOOR:g}")
        if self.damping_up <= 1 or self.damping_down <= 1:
            raise RangeError("damping factors must exceed 1")


@dataclass(frozen=True)
class SolveResult:
    solution: FSolution
    residual: float
    iterations: int
    start: int
    converged: bool
    fingerprint: tuple[float, ...] = field(default=(), compare=False)
    invertible_large: int = 0
    invertible_total: int = 0


def _cofactors(m: np.ndarray) -> np.ndarray:
    """d det(M) / d M[i, j]; exact for singular M too."""
    n = m.shape[0]
    if n == 1:
        return np.ones((1, 1), dtype=np.complex128)
    out = np.empty_like(m)
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(m, i, axis=0), j, axis=1)
            out[i, j] = (-1) ** (i + j) * np.linalg.det(minor)
    return out


@dataclass(frozen=True, eq=False)
class PolynomialSystem:
    """The pentagon equations of multiplicity-free rules as index arrays of monomials.

    Unknowns are the blocks followed by one inverse determinant per entry of
    ``maps``; each map is a square array of block indices laid out like
    ``assemble_matrix``.
    """

    rules: FusionRules
    unknowns: tuple[BlockKey, ...]
    equations: tuple[tuple[int, ...], ...]
    lhs: np.ndarray  # rows (equation, k1, k2, k3)
    rhs: np.ndarray  # rows (equation, k1, k2)
    maps: tuple[np.ndarray, ...] = ()

    @property
    def size(self) -> int:
        return len(self.unknowns)

    @property
    def width(self) -> int:
        return self.size + len(self.maps)

    def residual(self, f: np.ndarray) -> np.ndarray:
        """Pentagon rows, then one det(M) w_M - 1 row per map."""
        r = np.zeros(len(self.equations) + len(self.maps), dtype=np.complex128)
        e, i, j, k = self.lhs.T
        np.add.at(r, e, f[i] * f[j] * f[k])
        e, i, j = self.rhs.T
        np.add.at(r, e, -f[i] * f[j])
        offset = len(self.equations)
        for m, idx in enumerate(self.maps):
            r[offset + m] = np.linalg.det(f[idx]) * f[self.size + m] - 1.0
        return r

    def jacobian(self, f: np.ndarray) -> np.ndarray:
        """Complex Jacobian d r / d f; the residual is holomorphic in f."""
        jac = np.zeros((len(self.equations) + len(self.maps), self.width), dtype=np.complex128)
        e, i, j, k = self.lhs.T
        np.add.at(jac, (e, i), f[j] * f[k])
        np.add.at(jac, (e, j), f[i] * f[k])
        np.add.at(jac, (e, k), f[i] * f[j])
        e, i, j = self.rhs.T
        np.add.at(jac, (e, i), -f[j])
        np.add.at(jac, (e, j), -f[i])
        offset = len(self.equations)
        for m, idx in enumerate(self.maps):
            matrix = f[idx]
            jac[offset + m, idx.ravel()] += f[self.size + m] * _cofactors(matrix).ravel()
            jac[offset + m, self.size + m] = np.linalg.det(matrix)
        return jac

    def real_residual(self, theta: np.ndarray) -> np.ndarray:
        r = self.residual(_complex(theta))
        return np.concatenate([r.real, r.imag])

    def real_jacobian(self, theta: np.ndarray) -> np.ndarray:
        """[[Re J, -Im J], [Im J, Re J]] with respect to (Re f, Im f)."""
        jac = self.jacobian(_complex(theta))
        return np.block([[jac.real, -jac.imag], [jac.imag, jac.real]])

    def measure(self, theta: np.ndarray) -> float:
        """Max-abs residual with the pentagon rows taken relative to the block scale.

        Pentagon rows are divided by s^2 when the largest block magnitude s is
        below one, so families shrinking towards zero do not count as solved.
        """
        r = self.residual(_complex(theta))
        if r.size == 0:
            return 0.0
        n = len(self.equations)
        f = _complex(theta)[: self.size]
        scale = min(1.0, float(np.max(np.abs(f)))) if f.size else 1.0
        if scale == 0.0:
            return float("inf")
        pentagon = float(np.max(np.abs(r[:n]))) / scale**2 if n else 0.0
        determinant = float(np.max(np.abs(r[n:]))) if len(self.maps) else 0.0
        return max(pentagon, determinant)

    def start(self, f: np.ndarray) -> np.ndarray:
        """Real coordinates of blocks ``f`` with each w_M set to 1/det(M), or 1 for a singular M."""
        f = np.asarray(f, dtype=np.complex128)
        inverse = np.ones(len(self.maps), dtype=np.complex128)
        for m, idx in enumerate(self.maps):
            det = np.linalg.det(f[idx])
            if abs(det) > 1e-12:
                inverse[m] = 1.0 / det
        full = np.concatenate([f, inverse])
        return np.concatenate([full.real, full.imag])

    def solution(self, f: np.ndarray) -> FSolution:
        blocks = {
            labels: np.full((1, 1, 1, 1), value, dtype=np.complex128)
            for labels, value in zip(self.unknowns, f[: self.size])
        }
        return FSolution.from_blocks(self.rules, blocks)


def _complex(theta: np.ndarray) -> np.ndarray:
    half = len(theta) // 2
    return theta[:half] + 1j * theta[half:]


def _map_indices(rules: FusionRules, index: dict[BlockKey, int]) -> tuple[np.ndarray, ...]:
    n = rules.dims
    r = range(rules.size)
    out = []
    for a, b, c, d in map_keys(rules):
        xs = [x for x in r if n[a, b, x] and n[x, c, d]]
        ys = [y for y in r if n[b, c, y] and n[a, y, d]]
        if len(xs) != len(ys) or not xs:
            continue
        out.append(np.array([[index[(a, b, c, d, x, y)] for x in xs] for y in ys], dtype=np.int64))
    return tuple(out)


def build_system(rules: FusionRules) -> PolynomialSystem:
    if not rules.multiplicity_free:
        raise UnsupportedRulesError("the solver handles multiplicity-free rules (all N <= 1) only")
    unknowns = tuple(rules.admissible_blocks())
    index = {labels: k for k, labels in enumerate(unknowns)}
    equations, lhs, rhs = [], [], []
    for t in boundary_tuples(rules):
        if is_vacuous(rules, t):
            continue
        a, b, c, d, e = t.boundary
        for full in inner_tuples(rules, t):
            x, y, p, q = full.inner
            row = len(equations)
            equations.append((a, b, c, d, e, x, y, p, q))
            for z in range(rules.size):
                keys = ((a, b, c, y, x, z), (a, z, d, e, y, p), (b, c, d, p, z, q))
                if all(key in index for key in keys):
                    lhs.append((row,) + tuple(index[key] for key in keys))
            keys = ((x, c, d, e, y, q), (a, b, q, e, x, p))
            if all(key in index for key in keys):
                rhs.append((row,) + tuple(index[key] for key in keys))
    maps = _map_indices(rules, index)
    log.debug("%d unknowns, %d equations, %d determinant rows", len(unknowns), len(equations), len(maps))
    return PolynomialSystem(
        rules,
        unknowns,
        tuple(equations),
        np.array(lhs, dtype=np.int64).reshape(-1, 4),
        np.array(rhs, dtype=np.int64).reshape(-1, 3),
        maps,
    )


def levenberg_marquardt(
    system: PolynomialSystem, theta: np.ndarray, opts: SolveOptions
) -> tuple[np.ndarray, float, int]:
    """Iterate from ``theta``; returns (theta, scaled residual, iterations)."""
    damping = opts.damping
    r = system.real_residual(theta)
    cost = float(r @ r)
    iterations = 0
    for iterations in range(1, opts.max_iterations + 1):
        if r.size == 0 or system.measure(theta) <= opts.residual_target:
            break
        jac = system.real_jacobian(theta)
        jtj = jac.T @ jac
        grad = jac.T @ r
        while True:
            step, *_ = np.linalg.lstsq(jtj + damping * np.eye(len(theta)), grad, rcond=None)
            candidate = theta - step
            r_new = system.real_residual(candidate)
            cost_new = float(r_new @ r_new)
            if cost_new < cost:
                theta, r, cost = candidate, r_new, cost_new
                damping = max(damping / opts.damping_down, 1e-15)
                break
            damping *= opts.damping_up
            if damping > 1e16:
                break
        if damping > 1e16:
            break
    return theta, system.measure(theta), iterations


def family_scale(sol: FSolution) -> float:
    """Largest block entry magnitude."""
    return max((float(np.max(np.abs(block.coords))) for block in sol.blocks() if block.coords.size), default=0.0)


def is_invertible(matrix: np.ndarray, scale: float) -> bool:
    """Square, not negligible against ``scale``, and with condition number at most 1e8."""
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.size == 0:
        return False
    if float(np.max(np.abs(matrix))) <= RELATIVE_FLOOR * scale:
        return False
    return bool(np.linalg.cond(matrix) <= INVERTIBLE_CONDITION)


def invertible_counts(sol: FSolution) -> tuple[int, int]:
    scale = family_scale(sol)
    large = total = 0
    for key in map_keys(sol.rules):
        matrix = assemble_matrix(sol.fmap(*key), sol.rules)
        if is_invertible(matrix, scale):
            total += 1
            large += matrix.shape[0] >= 2
    return large, total


def _sinkhorn(weights: np.ndarray, iterations: int = 500) -> np.ndarray:
    """Diagonal rescaling of a nonnegative matrix towards equal row and column sums."""
    m = weights.copy()
    for _ in range(iterations):
        previous = m
        rows = m.sum(axis=1, keepdims=True)
        m = np.divide(m, rows, out=np.zeros_like(m), where=rows > 0)
        cols = m.sum(axis=0, keepdims=True)
        m = np.divide(m, cols, out=np.zeros_like(m), where=cols > 0)
        if np.allclose(m, previous, rtol=0.0, atol=1e-13):
            break
    return m


def balanced_magnitudes(matrix: np.ndarray) -> np.ndarray:
    """Square root of the Sinkhorn-balanced |M|^2; unchanged by rescaling rows and columns of M."""
    return np.sqrt(_sinkhorn(np.abs(np.asarray(matrix)) ** 2))


def fingerprint(sol: FSolution) -> tuple[float, ...]:
    """Sorted entry magnitudes of every assembled F-map after Sinkhorn balancing of |M|^2.

    Rescaling the bases of the modules multiplies each |M|^2 by diagonal
    matrices on both sides, which the balancing removes.
    """
    values: list[float] = []
    for key in map_keys(sol.rules):
        matrix = assemble_matrix(sol.fmap(*key), sol.rules)
        if matrix.size == 0:
            continue
        values.extend(balanced_magnitudes(matrix).ravel().tolist())
    return tuple(sorted(values))


def gauge_invariants(sol: FSolution) -> np.ndarray:
    """Cheap rescaling-invariant products of scalar blocks.

    Single blocks with no net gauge charge, products and ratios of pairs whose
    charges cancel or agree, and cross ratios of 2x2 maps. NaN marks a ratio
    whose denominator is negligible against the largest block.
    """
    rules = sol.rules
    keys = list(rules.admissible_blocks())
    modules: dict[tuple[int, int, int], int] = {}
    charges = np.zeros((len(keys), rules.size**3), dtype=np.int64)
    for k, (a, b, c, d, x, y) in enumerate(keys):
        for module, sign in (((x, c, d), 1), ((a, b, x), 1), ((a, y, d), -1), ((b, c, y), -1)):
            charges[k, modules.setdefault(module, len(modules))] += sign
    values = [complex(np.ravel(sol.block(*key))[0]) if sol.block(*key) is not None else 0j for key in keys]
    floor = RELATIVE_FLOOR * family_scale(sol)

    out: list[complex] = []
    for i in range(len(keys)):
        if not np.any(charges[i]):
            out.append(values[i])
        for j in range(i + 1, len(keys)):
            if not np.any(charges[i] + charges[j]):
                out.append(values[i] * values[j])
            elif np.array_equal(charges[i], charges[j]):
                out.append(values[i] / values[j] if abs(values[j]) > floor else complex("nan"))
    for key in map_keys(rules):
        matrix = assemble_matrix(sol.fmap(*key), rules)
        if matrix.shape == (2, 2):
            den = matrix[0, 1] * matrix[1, 0]
            out.append(matrix[0, 0] * matrix[1, 1] / den if abs(den) > floor**2 else complex("nan"))
    return np.array(out, dtype=np.complex128)


def rank_key(result: SolveResult) -> tuple:
    """Invertible maps of size >= 2 first, then all invertible maps, then residual, then start."""
    return (-result.invertible_large, -result.invertible_total, result.residual, result.start)


def _same(u: np.ndarray, v: np.ndarray, tol: float) -> bool:
    return u.shape == v.shape and bool(np.allclose(u, v, rtol=0.0, atol=tol, equal_nan=True))


def solve_multiplicity_free(
    rules: FusionRules,
    opts: SolveOptions | None = None,
    on_progress: Callable[[int, int], None] | None = None,
    include_failed: bool = False,
) -> list[SolveResult]:
    """Run every start and return converged results, ranked, one per distinct solution.

    A start converges when its scaled residual reaches the target and every
    square F-map passes ``is_invertible``. Two results are the same solution when their fingerprints and gauge
    invariants agree within 1e-6. With ``include_failed`` the unconverged
    starts follow, ranked by residual.
    """
    opts = opts or SolveOptions()
    system = build_system(rules)
    rng = np.random.default_rng(opts.seed)
    starts = [system.start(_complex(rng.uniform(-1.0, 1.0, 2 * system.size))) for _ in range(opts.starts)]

    def run(index: int) -> SolveResult:
        theta, residual, iterations = levenberg_marquardt(system, starts[index], opts)
        sol = system.solution(_complex(theta))
        large, total = invertible_counts(sol)
        converged = residual <= opts.residual_target and total == len(system.maps)
        log.debug("start %d: residual %.3e after %d iterations", index, residual, iterations)
        return SolveResult(sol, residual, iterations, index, converged, fingerprint(sol), large, total)

    results: list[SolveResult] = []
    if opts.workers > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as pool:
            for done, result in enumerate(pool.map(run, range(opts.starts)), 1):
                results.append(result)
                if on_progress:
                    on_progress(done, opts.starts)
    else:
        for index in range(opts.starts):
            results.append(run(index))
            if on_progress:
                on_progress(index + 1, opts.starts)

    converged = sorted((r for r in results if r.converged), key=rank_key)
    distinct: list[tuple[SolveResult, np.ndarray]] = []
    for result in converged:
        invariants = gauge_invariants(result.solution)
        fp = np.array(result.fingerprint)
        if any(_same(fp, np.array(o.fingerprint), 1e-6) and _same(invariants, inv, 1e-6) for o, inv in distinct):
            continue
        distinct.append((result, invariants))

    ranked = [result for result, _ in distinct]
    if not ranked:
        best = min(results, key=lambda r: (r.residual, r.start)) if results else None
        log.info(
            "no start converged to %.1e; best residual %s",
            opts.residual_target,
            f"{best.residual:.3e} (start {best.start})" if best else "n/a",
        )
    else:
        log.info("%d of %d starts converged, %d distinct", len(converged), opts.starts, len(ranked))
    if include_failed:
        ranked += sorted((r for r in results if not r.converged), key=lambda r: (r.residual, r.start))
    return ranked


def jacobian_check(
    rules: FusionRules,
    point: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
    step: float = 1e-6,
) -> float:
    """Max-abs deviation of the analytic Jacobian from central differences.

    ``point`` holds one complex value per block (in lexicographic block
    order), optionally followed by the inverse determinants, which default
    to 1. Blocks are drawn uniformly from [-1, 1] + i[-1, 1] when omitted.
    """
    system = build_system(rules)
    if point is None:
        rng = rng or np.random.default_rng()
        point = rng.uniform(-1, 1, system.size) + 1j * rng.uniform(-1, 1, system.size)
    point = np.asarray(point, dtype=np.complex128).reshape(-1)
    if point.size == system.size:
        point = np.concatenate([point, np.ones(len(system.maps), dtype=np.complex128)])
    theta = np.concatenate([point.real, point.imag])
    analytic = system.real_jacobian(theta)
    numeric = np.empty_like(analytic)
    for k in range(len(theta)):
        shift = np.zeros_like(theta)
        shift[k] = step
        numeric[:, k] = (system.real_residual(theta + shift) - system.real_residual(theta - shift)) / (2 * step)
    return float(np.max(np.abs(analytic - numeric))) if analytic.size else 0.0
