"""Tensor and vector forms of 6j-symbols, contraction, and the tensor-form pentagon check.

The tensor 𝔽_abc^d|^x_y carries the coordinates R[i, j, r, s] of the block
F_abc^d|^x_y on the slots V_xc^d, V_ab^x (primal) and V_ay^d, V_bc^y (dual).
The vector F_abc^d|^x_y carries the same coordinates with the variances
swapped.

After the three contractions of the left side (and the single contraction
of the right side) six slots remain. Both sides are brought to the order

    V_yd^e, V_xc^y, V_ab^x (primal), V_ap^e, V_bq^p, V_cd^q (dual)

so that ``T[u, v, w, r, s, t]`` equals entry ``[(r, s, t), (u, v, w)]`` of the
component-form matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ContractionPairError, ShapeError
from .models import BlockKey, FBlock, FSolution, FusionRules, ResidualReport
from .pentagon import DEFAULT_TOLERANCE, PentagonTuple, inner_tuples, sweep

Module = tuple[int, int, int]


@dataclass(frozen=True)
class Slot:
    """One tensor factor: the module V_ab^c it lives on and whether it is the dual."""

    module: Module
    dual: bool
    dim: int

    def __str__(self) -> str:
        a, b, c = self.module
        return f"V_{a}{b}^{c}" + ("*" if self.dual else "")


@dataclass(frozen=True, eq=False)
class GeneralTensor:
    slots: tuple[Slot, ...]
    coords: np.ndarray

    def __post_init__(self) -> None:
        slots = tuple(self.slots)
        coords = np.asarray(self.coords, dtype=np.complex128)
        if coords.shape != tuple(slot.dim for slot in slots):
            raise ShapeError(
                f"coordinates of shape {coords.shape} for slots {[str(s) for s in slots]}"
            )
        object.__setattr__(self, "slots", slots)
        object.__setattr__(self, "coords", coords)

    @classmethod
    def scalar(cls, value: complex) -> GeneralTensor:
        return cls((), np.asarray(value, dtype=np.complex128))

    @property
    def rank(self) -> int:
        return len(self.slots)

    def transpose(self, order: Sequence[int]) -> GeneralTensor:
        return GeneralTensor(tuple(self.slots[i] for i in order), np.transpose(self.coords, order))


@dataclass(frozen=True, eq=False)
class Tensor6j:
    """𝔽_abc^d|^x_y on V_xc^d (x) V_ab^x (x) (V_ay^d)* (x) (V_bc^y)*."""

    labels: BlockKey
    coords: np.ndarray

    @property
    def slots(self) -> tuple[Slot, ...]:
        return _block_slots(self.labels, self.coords.shape, dual_source=False)

    @property
    def general(self) -> GeneralTensor:
        return GeneralTensor(self.slots, self.coords)


@dataclass(frozen=True, eq=False)
class Vector6j:
    """F_abc^d|^x_y in (V_xc^d)* (x) (V_ab^x)* (x) V_ay^d (x) V_bc^y."""

    labels: BlockKey
    coords: np.ndarray

    @property
    def slots(self) -> tuple[Slot, ...]:
        return _block_slots(self.labels, self.coords.shape, dual_source=True)

    @property
    def general(self) -> GeneralTensor:
        return GeneralTensor(self.slots, self.coords)


def _block_slots(labels: BlockKey, shape: tuple[int, ...], dual_source: bool) -> tuple[Slot, ...]:
    a, b, c, d, x, y = labels
    modules = ((x, c, d), (a, b, x), (a, y, d), (b, c, y))
    variances = (dual_source, dual_source, not dual_source, not dual_source)
    return tuple(Slot(m, v, n) for m, v, n in zip(modules, variances, shape))


def to_tensor(block: FBlock) -> Tensor6j:
    return Tensor6j(block.labels, block.coords)


def to_vector(block: FBlock) -> Vector6j:
    return Vector6j(block.labels, block.coords)


def from_tensor(t: Tensor6j | Vector6j) -> FBlock:
    return FBlock(t.labels, t.coords)


def tensor_product(t1: GeneralTensor, t2: GeneralTensor) -> GeneralTensor:
    return GeneralTensor(t1.slots + t2.slots, np.multiply.outer(t1.coords, t2.coords))


def contract(t: GeneralTensor, primal_slot: int, dual_slot: int) -> GeneralTensor:
    """Sum over a primal slot paired with the dual slot of the same module."""
    for index in (primal_slot, dual_slot):
        if not 0 <= index < t.rank:
            raise ContractionPairError(f"slot {index} outside 0..{t.rank - 1}")
    if primal_slot == dual_slot:
        raise ContractionPairError("cannot contract a slot with itself")
    primal, dual = t.slots[primal_slot], t.slots[dual_slot]
    if primal.dual or not dual.dual:
        raise ContractionPairError(f"slots {primal} and {dual} are not a primal/dual pair")
    if primal.module != dual.module:
        raise ContractionPairError(f"slots {primal} and {dual} live on different modules")
    if primal.dim != dual.dim:
        raise ContractionPairError(f"slots {primal} and {dual} have different dimensions")

    coords = np.trace(t.coords, axis1=primal_slot, axis2=dual_slot)
    slots = tuple(s for i, s in enumerate(t.slots) if i not in (primal_slot, dual_slot))
    return GeneralTensor(slots, coords)


def contract_pairs(t: GeneralTensor, pairs: Sequence[tuple[int, int]]) -> GeneralTensor:
    """Contract several (primal, dual) pairs, all given as slot indices of ``t``."""
    positions = list(range(t.rank))
    for primal, dual in pairs:
        try:
            i, j = positions.index(primal), positions.index(dual)
        except ValueError:
            raise ContractionPairError(f"slot pair ({primal}, {dual}) used twice") from None
        t = contract(t, i, j)
        positions = [p for p in positions if p not in (primal, dual)]
    return t


def vector_apply(vector: Vector6j, alpha: np.ndarray) -> GeneralTensor:
    """Pair F_abc^d|^x_y with a vector of V_xc^d (x) V_ab^x; the result lives on V_ay^d (x) V_bc^y."""
    source_slots = tuple(Slot(s.module, False, s.dim) for s in vector.slots[:2])
    source = GeneralTensor(source_slots, alpha)
    return contract_pairs(tensor_product(vector.general, source), [(4, 0), (5, 1)])


def canonical_slots(rules: FusionRules, t: PentagonTuple) -> tuple[Slot, ...]:
    a, b, c, d, e = t.boundary
    x, y, p, q = t.inner
    primal = ((y, d, e), (x, c, y), (a, b, x))
    dual = ((a, p, e), (b, q, p), (c, d, q))
    return tuple(Slot(m, False, int(rules.dims[m])) for m in primal) + tuple(
        Slot(m, True, int(rules.dims[m])) for m in dual
    )


def _zero(rules: FusionRules, t: PentagonTuple) -> GeneralTensor:
    slots = canonical_slots(rules, t)
    return GeneralTensor(slots, np.zeros(tuple(s.dim for s in slots), dtype=np.complex128))


def _tensor(sol: FSolution, labels: BlockKey) -> GeneralTensor | None:
    coords = sol.block(*labels)
    return None if coords is None else Tensor6j(labels, coords).general


# Slots 0-3: 𝔽_bcd^p|^z_q, 4-7: 𝔽_azd^e|^y_p, 8-11: 𝔽_abc^y|^x_z.
LHS_PAIRS = ((5, 10), (1, 11), (0, 7))
LHS_ORDER = (2, 4, 5, 3, 0, 1)
# Slots 0-3: 𝔽_xcd^e|^y_q, 4-7: 𝔽_abq^e|^x_p.
RHS_PAIRS = ((4, 2),)
RHS_ORDER = (0, 1, 3, 4, 5, 2)

Lookup = Callable[[BlockKey], "GeneralTensor | None"]


def contracted_lhs(
    rules: FusionRules,
    t: PentagonTuple,
    lookup: Lookup,
    weight: Callable[[int], complex] | None = None,
) -> GeneralTensor:
    """Σ_z weight(z) *_zd^p *_bc^z *_az^y (T_bcd^p|^z_q (x) T_azd^e|^y_p (x) T_abc^y|^x_z).

    ``lookup`` returns the tensor stored under a block key, or None when the
    block is absent. The result is in canonical slot order.
    """
    t.validate(rules)
    a, b, c, d, e = t.boundary
    x, y, p, q = t.inner
    total = _zero(rules, t)
    for z in range(rules.size):
        t1 = lookup((b, c, d, p, z, q))
        t2 = lookup((a, z, d, e, y, p))
        t3 = lookup((a, b, c, y, x, z))
        if t1 is None or t2 is None or t3 is None:
            continue
        term = contract_pairs(tensor_product(tensor_product(t1, t2), t3), LHS_PAIRS)
        total.coords[...] += (weight(z) if weight else 1.0) * term.transpose(LHS_ORDER).coords
    return total


def contracted_rhs(rules: FusionRules, t: PentagonTuple, lookup: Lookup) -> GeneralTensor:
    """*_xq^e (T_xcd^e|^y_q (x) T_abq^e|^x_p) in canonical slot order."""
    t.validate(rules)
    a, b, c, d, e = t.boundary
    x, y, p, q = t.inner
    t4 = lookup((x, c, d, e, y, q))
    t5 = lookup((a, b, q, e, x, p))
    if t4 is None or t5 is None:
        return _zero(rules, t)
    return contract_pairs(tensor_product(t4, t5), RHS_PAIRS).transpose(RHS_ORDER)


def lhs_tensor(sol: FSolution, t: PentagonTuple) -> GeneralTensor:
    return contracted_lhs(sol.rules, t, lambda labels: _tensor(sol, labels))


def rhs_tensor(sol: FSolution, t: PentagonTuple) -> GeneralTensor:
    return contracted_rhs(sol.rules, t, lambda labels: _tensor(sol, labels))


def _max_abs(diff: np.ndarray) -> float:
    return float(np.max(np.abs(diff))) if diff.size else 0.0


def check_pentagon_tensor(sol: FSolution, t: PentagonTuple) -> float:
    """Max-abs difference of the two sides over the six free slots.

    Without inner colours, the max over every inner tuple of the boundary.
    """
    if t.x is None:
        return max((check_pentagon_tensor(sol, full) for full in inner_tuples(sol.rules, t)), default=0.0)
    return _max_abs(lhs_tensor(sol, t).coords - rhs_tensor(sol, t).coords)


def check_all_tensor(
    sol: FSolution,
    tol: float = DEFAULT_TOLERANCE,
    workers: int | None = None,
    on_progress: Callable[[int, int], None] | None = None,
) -> ResidualReport:
    return sweep(sol.rules, lambda t: check_pentagon_tensor(sol, t), tol, "tensor", workers, on_progress)
