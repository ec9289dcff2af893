"""The pentagon relation in global and component form, and the tuple sweep."""

from __future__ import annotations

import itertools
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional

import numpy as np

from .core import basis_batch, flatten_sum, permute_23
from .errors import InvalidLabelError, ShapeError
from .models import FSolution, FusionRules, ResidualReport, SumLayout, SumVector

log = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10
FORMS = ("global", "component")


@dataclass(frozen=True)
class PentagonTuple:
    """Boundary colours (a, b, c, d, e), optionally with the inner colours (x, y, p, q)."""

    a: int
    b: int
    c: int
    d: int
    e: int
    x: Optional[int] = None
    y: Optional[int] = None
    p: Optional[int] = None
    q: Optional[int] = None

    @classmethod
    def of(cls, labels: Iterable[int]) -> PentagonTuple:
        return cls(*(int(v) for v in labels))

    @property
    def boundary(self) -> tuple[int, int, int, int, int]:
        return (self.a, self.b, self.c, self.d, self.e)

    @property
    def inner(self) -> tuple[int, int, int, int]:
        if None in (self.x, self.y, self.p, self.q):
            raise ShapeError(f"tuple {self.boundary} has no inner colours (x, y, p, q)")
        return (self.x, self.y, self.p, self.q)

    def with_inner(self, x: int, y: int, p: int, q: int) -> PentagonTuple:
        return PentagonTuple(*self.boundary, x, y, p, q)

    def validate(self, rules: FusionRules) -> None:
        for label in self.boundary + tuple(v for v in (self.x, self.y, self.p, self.q) if v is not None):
            if not 0 <= label < rules.size:
                raise InvalidLabelError(f"label {label} outside 0..{rules.size - 1}")


def source_layout(t: PentagonTuple) -> SumLayout:
    """⊕_{x,y} V_yd^e (x) V_xc^y (x) V_ab^x."""
    return SumLayout(("x", "y"), (("y", t.d, t.e), ("x", t.c, "y"), (t.a, t.b, "x")))


def target_layout(t: PentagonTuple) -> SumLayout:
    """⊕_{p,q} V_ap^e (x) V_bq^p (x) V_cd^q."""
    return SumLayout(("p", "q"), ((t.a, "p", t.e), (t.b, "q", "p"), (t.c, t.d, "q")))


Route = Callable[[tuple[int, ...]], Iterator[tuple[tuple[int, ...], tuple[int, ...]]]]


def _stage(sol: FSolution, v: SumVector, layout: SumLayout, front: bool, route: Route) -> SumVector:
    """Apply ⊕ F (x) id (``front``) or ⊕ id (x) F to every summand of ``v``.

    ``route(key)`` yields the F-block labels fed by the summand ``key`` and the
    key of the summand the result lands in.
    """
    out: dict[tuple[int, ...], np.ndarray] = {}
    for key, value in v.entries.items():
        for labels, out_key in route(key):
            block = sol.block(*labels)
            if block is None:
                continue
            if front:
                term = np.tensordot(block, value, axes=([0, 1], [0, 1]))
            else:
                term = np.einsum("ijrs,uij...->urs...", block, value)
            out[out_key] = out[out_key] + term if out_key in out else term
    return SumVector(sol.rules, layout, out, v.batch_shape)


def _check_source(sol: FSolution, t: PentagonTuple, alpha: SumVector) -> None:
    t.validate(sol.rules)
    if alpha.layout != source_layout(t):
        raise ShapeError(f"vector does not live in the source direct sum of tuple {t.boundary}")


def lhs_global(sol: FSolution, t: PentagonTuple, alpha: SumVector) -> SumVector:
    """(⊕_y id (x) F_abc^y), then (⊕_z F_azd^e (x) id), then (⊕_p id (x) F_bcd^p)."""
    _check_source(sol, t, alpha)
    a, b, c, d, e = t.boundary
    labels = range(sol.rules.size)

    beta = _stage(
        sol,
        alpha,
        SumLayout(("y", "z"), (("y", d, e), (a, "z", "y"), (b, c, "z"))),
        False,
        lambda k: (((a, b, c, k[1], k[0], z), (k[1], z)) for z in labels),
    )
    gamma = _stage(
        sol,
        beta,
        SumLayout(("z", "p"), ((a, "p", e), ("z", d, "p"), (b, c, "z"))),
        True,
        lambda k: (((a, k[1], d, e, k[0], p), (k[1], p)) for p in labels),
    )
    return _stage(
        sol,
        gamma,
        target_layout(t),
        False,
        lambda k: (((b, c, d, k[1], k[0], q), (k[1], q)) for q in labels),
    )


def rhs_global(sol: FSolution, t: PentagonTuple, alpha: SumVector) -> SumVector:
    """(⊕_x F_xcd^e (x) id), then P23, then (⊕_q F_abq^e (x) id)."""
    _check_source(sol, t, alpha)
    a, b, c, d, e = t.boundary
    labels = range(sol.rules.size)

    delta = _stage(
        sol,
        alpha,
        SumLayout(("x", "q"), (("x", "q", e), (c, d, "q"), (a, b, "x"))),
        True,
        lambda k: (((k[0], c, d, e, k[1], q), (k[0], q)) for q in labels),
    )
    epsilon = permute_23(delta)
    return _stage(
        sol,
        epsilon,
        target_layout(t),
        True,
        lambda k: (((a, b, k[1], e, k[0], p), (p, k[1])) for p in labels),
    )


def assemble_lhs(sol: FSolution, t: PentagonTuple) -> np.ndarray:
    """Matrix of the left side; rows follow the (p, q) summands, columns the (x, y) summands."""
    t.validate(sol.rules)
    return flatten_sum(lhs_global(sol, t, basis_batch(sol.rules, source_layout(t))))


def assemble_rhs(sol: FSolution, t: PentagonTuple) -> np.ndarray:
    t.validate(sol.rules)
    return flatten_sum(rhs_global(sol, t, basis_batch(sol.rules, source_layout(t))))


def _max_abs(diff: np.ndarray) -> float:
    return float(np.max(np.abs(diff))) if diff.size else 0.0


def check_pentagon_global(sol: FSolution, t: PentagonTuple) -> float:
    """Max-abs entry of the difference of the two assembled sides."""
    return _max_abs(assemble_lhs(sol, t) - assemble_rhs(sol, t))


def _component_shapes(rules: FusionRules, t: PentagonTuple) -> tuple[tuple[int, ...], tuple[int, ...]]:
    a, b, c, d, e = t.boundary
    x, y, p, q = t.inner
    n = rules.dims
    out_shape = (int(n[a, p, e]), int(n[b, q, p]), int(n[c, d, q]))
    in_shape = (int(n[y, d, e]), int(n[x, c, y]), int(n[a, b, x]))
    return out_shape, in_shape


def lhs_component(sol: FSolution, t: PentagonTuple) -> np.ndarray:
    """Σ_z (id (x) F_abc^y|^x_z) ∘ (F_azd^e|^y_p (x) id) ∘ (id (x) F_bcd^p|^z_q) as a matrix.

    Rows index V_ap^e (x) V_bq^p (x) V_cd^q, columns V_yd^e (x) V_xc^y (x) V_ab^x,
    both row-major; absent blocks contribute zero.
    """
    t.validate(sol.rules)
    a, b, c, d, e = t.boundary
    x, y, p, q = t.inner
    out_shape, in_shape = _component_shapes(sol.rules, t)
    total = np.zeros(out_shape + in_shape, dtype=np.complex128)
    for z in range(sol.rules.size):
        r1 = sol.block(a, b, c, y, x, z)
        r2 = sol.block(a, z, d, e, y, p)
        r3 = sol.block(b, c, d, p, z, q)
        if r1 is None or r2 is None or r3 is None:
            continue
        total += np.einsum("vwij,uirk,kjst->rstuvw", r1, r2, r3)
    return total.reshape(int(np.prod(out_shape)), int(np.prod(in_shape)))


def rhs_component(sol: FSolution, t: PentagonTuple) -> np.ndarray:
    """(F_xcd^e|^y_q (x) id) ∘ P23 ∘ (F_abq^e|^x_p (x) id) as a matrix, laid out like lhs_component."""
    t.validate(sol.rules)
    a, b, c, d, e = t.boundary
    x, y, p, q = t.inner
    out_shape, in_shape = _component_shapes(sol.rules, t)
    r4 = sol.block(x, c, d, e, y, q)
    r5 = sol.block(a, b, q, e, x, p)
    if r4 is None or r5 is None:
        total = np.zeros(out_shape + in_shape, dtype=np.complex128)
    else:
        total = np.einsum("uvkt,kwrs->rstuvw", r4, r5)
    return total.reshape(int(np.prod(out_shape)), int(np.prod(in_shape)))


def inner_tuples(rules: FusionRules, t: PentagonTuple) -> Iterator[PentagonTuple]:
    """All (x, y, p, q) whose source and target summands are both nonzero."""
    sources = [key for key, _ in source_layout(t).summands(rules)]
    targets = [key for key, _ in target_layout(t).summands(rules)]
    for (x, y), (p, q) in itertools.product(sources, targets):
        yield t.with_inner(x, y, p, q)


def check_pentagon_component(sol: FSolution, t: PentagonTuple) -> float:
    """Residual of one boundary tuple: max over its inner tuples, or of one inner tuple if fixed."""
    t.validate(sol.rules)
    if t.x is not None:
        return _max_abs(lhs_component(sol, t) - rhs_component(sol, t))
    return max(
        (_max_abs(lhs_component(sol, full) - rhs_component(sol, full)) for full in inner_tuples(sol.rules, t)),
        default=0.0,
    )


def boundary_tuples(rules: FusionRules) -> Iterator[PentagonTuple]:
    for labels in itertools.product(range(rules.size), repeat=5):
        yield PentagonTuple(*labels)


def is_vacuous(rules: FusionRules, t: PentagonTuple) -> bool:
    """Both sides are maps out of, or into, a zero-dimensional space."""
    return source_layout(t).total_dim(rules) == 0 or target_layout(t).total_dim(rules) == 0


def sweep_workers() -> int:
    """Worker count for tuple sweeps; ``PENTA_THREADS`` caps it."""
    workers = os.cpu_count() or 1
    cap = os.environ.get("PENTA_THREADS")
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            log.warning("ignoring PENTA_THREADS=%r (not an integer)", cap)
    return workers


def sweep(
    rules: FusionRules,
    residual: Callable[[PentagonTuple], float],
    tol: float,
    form: str,
    workers: int | None = None,
    on_progress: Callable[[int, int], None] | None = None,
) -> ResidualReport:
    """Evaluate ``residual`` on every non-vacuous boundary tuple and merge by max."""
    started = time.perf_counter()
    tuples = []
    vacuous = 0
    for t in boundary_tuples(rules):
        if is_vacuous(rules, t):
            vacuous += 1
        else:
            tuples.append(t)

    total = len(tuples)
    per_tuple: dict[tuple[int, ...], float] = {}
    workers = sweep_workers() if workers is None else max(1, workers)
    log.debug("%s sweep: %d tuples, %d vacuous, %d workers", form, total, vacuous, workers)

    if workers == 1 or total < 2:
        for done, t in enumerate(tuples, 1):
            per_tuple[t.boundary] = residual(t)
            if on_progress:
                on_progress(done, total)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for done, (t, value) in enumerate(zip(tuples, pool.map(residual, tuples)), 1):
                per_tuple[t.boundary] = value
                if on_progress:
                    on_progress(done, total)

    wall_ms = (time.perf_counter() - started) * 1000.0
    return ResidualReport(dict(sorted(per_tuple.items())), tol, vacuous, form, wall_ms)


def check_all(
    sol: FSolution,
    tol: float = DEFAULT_TOLERANCE,
    form: str = "global",
    workers: int | None = None,
    on_progress: Callable[[int, int], None] | None = None,
) -> ResidualReport:
    checks = {"global": check_pentagon_global, "component": check_pentagon_component}
    if form not in checks:
        raise ValueError(f"unknown form {form!r}, expected one of {FORMS}")
    check = checks[form]
    return sweep(sol.rules, lambda t: check(sol, t), tol, form, workers, on_progress)
