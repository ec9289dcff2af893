"""Normalized symbols |a b x; c d y| = 𝔽_abc^d|^x_y / w_y, the weighted identity, and the symmetry test."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable, Literal, Mapping, Sequence

import numpy as np

from .errors import InvalidLabelError, WeightError
from .models import BlockKey, FSolution, FusionRules, ResidualReport
from .pentagon import DEFAULT_TOLERANCE, PentagonTuple, inner_tuples, sweep
from .tensor import GeneralTensor, Tensor6j, contracted_lhs, contracted_rhs

log = logging.getLogger(__name__)

MIN_WEIGHT = 1e-15


@dataclass(frozen=True)
class WeightSystem:
    """A nonzero scalar w_x for every colour x."""

    values: tuple[complex, ...]

    def __post_init__(self) -> None:
        values = tuple(complex(v) for v in self.values)
        for label, value in enumerate(values):
            if not np.isfinite(value):
                raise WeightError(f"weight of colour {label} is not finite")
            if abs(value) <= MIN_WEIGHT:
                raise WeightError(f"weight of colour {label} vanishes ({value})")
        object.__setattr__(self, "values", values)

    @classmethod
    def uniform(cls, rules: FusionRules, value: complex = 1.0) -> WeightSystem:
        return cls((value,) * rules.size)

    @classmethod
    def random(
        cls, rules: FusionRules, rng: np.random.Generator, low: float = 0.5, high: float = 2.0
    ) -> WeightSystem:
        return cls(tuple(rng.uniform(low, high, rules.size)))

    @classmethod
    def from_mapping(cls, rules: FusionRules, weights: Mapping[int, complex]) -> WeightSystem:
        missing = [rules.names[i] for i in range(rules.size) if i not in weights]
        if missing:
            raise WeightError(f"no weight for colours {', '.join(missing)}")
        for label in weights:
            if not 0 <= label < rules.size:
                raise InvalidLabelError(f"weight given for unknown colour {label}")
        return cls(tuple(weights[i] for i in range(rules.size)))

    def __getitem__(self, label: int) -> complex:
        return self.values[label]

    def __len__(self) -> int:
        return len(self.values)

    def check(self, rules: FusionRules) -> None:
        if len(self.values) != rules.size:
            raise WeightError(f"{len(self.values)} weights for {rules.size} colours")


@dataclass(frozen=True, eq=False)
class NormalizedSymbol:
    """|a b x; c d y| stored under the block key (a, b, c, d, x, y)."""

    labels: BlockKey
    coords: np.ndarray

    @property
    def general(self) -> GeneralTensor:
        return Tensor6j(self.labels, self.coords).general


@dataclass(frozen=True, eq=False)
class NormalizedFamily:
    rules: FusionRules
    weights: WeightSystem
    symbols: Mapping[BlockKey, NormalizedSymbol]

    def symbol(self, labels: BlockKey) -> np.ndarray | None:
        found = self.symbols.get(tuple(labels))
        return None if found is None else found.coords

    def tensor(self, labels: BlockKey) -> GeneralTensor | None:
        found = self.symbols.get(tuple(labels))
        return None if found is None else found.general


def normalize(sol: FSolution, w: WeightSystem) -> NormalizedFamily:
    """Divide every tensor by the weight of its lower-right colour y."""
    w.check(sol.rules)
    symbols = {
        block.labels: NormalizedSymbol(block.labels, block.coords / w[block.labels[5]])
        for block in sol.blocks()
    }
    return NormalizedFamily(sol.rules, w, symbols)


def denormalize(family: NormalizedFamily) -> FSolution:
    w = family.weights
    return FSolution.from_blocks(
        family.rules,
        {labels: symbol.coords * w[labels[5]] for labels, symbol in family.symbols.items()},
    )


def check_biedenharn_elliott(family: NormalizedFamily, w: WeightSystem, t: PentagonTuple) -> float:
    """Max-abs difference of Σ_z w_z (three contracted symbols) and the contracted pair.

    Without inner colours, the max over every inner tuple of the boundary.
    """
    w.check(family.rules)
    if t.x is None:
        return max(
            (check_biedenharn_elliott(family, w, full) for full in inner_tuples(family.rules, t)),
            default=0.0,
        )
    lhs = contracted_lhs(family.rules, t, family.tensor, weight=lambda z: w[z])
    rhs = contracted_rhs(family.rules, t, family.tensor)
    diff = lhs.coords - rhs.coords
    return float(np.max(np.abs(diff))) if diff.size else 0.0


def check_all_biedenharn_elliott(
    family: NormalizedFamily,
    w: WeightSystem | None = None,
    tol: float = DEFAULT_TOLERANCE,
    workers: int | None = None,
    on_progress: Callable[[int, int], None] | None = None,
) -> ResidualReport:
    w = w or family.weights
    return sweep(
        family.rules,
        lambda t: check_biedenharn_elliott(family, w, t),
        tol,
        "be",
        workers,
        on_progress,
    )


SymmetryStatus = Literal["symmetric", "asymmetric", "not-applicable"]


@dataclass(frozen=True)
class SymmetryResult:
    status: SymmetryStatus
    residual: float | None = None


def symmetry_variants(labels: Sequence[int]) -> tuple[BlockKey, BlockKey, BlockKey]:
    """Block keys of |a b x; c d y|, |b a x; d c y| and |y d a; x b c|."""
    a, b, c, d, x, y = labels
    return (a, b, c, d, x, y), (b, a, d, c, x, y), (y, d, x, b, a, c)


def _modules(labels: BlockKey) -> tuple[tuple[int, int, int], ...]:
    a, b, c, d, x, y = labels
    return (x, c, d), (a, b, x), (a, y, d), (b, c, y)


def check_symmetry(family: NormalizedFamily, labels: Sequence[int], tol: float = DEFAULT_TOLERANCE) -> SymmetryResult:
    """Compare the three scalars |a b x; c d y| = |b a x; d c y| = |y d a; x b c|.

    Only defined when every module of the three symbols has dimension at most 1;
    a symbol touching a zero-dimensional module counts as 0.
    """
    variants = symmetry_variants(labels)
    dims = family.rules.dims
    if any(dims[m] > 1 for key in variants for m in _modules(key)):
        return SymmetryResult("not-applicable")
    values = []
    for key in variants:
        coords = family.symbol(key)
        values.append(0j if coords is None else complex(coords.reshape(-1)[0]))
    residual = max(abs(u - v) for i, u in enumerate(values) for v in values[i + 1:])
    return SymmetryResult("symmetric" if residual <= tol else "asymmetric", residual)


def _inverse_third(key: BlockKey) -> BlockKey:
    big_a, big_b, big_c, big_d, big_x, big_y = key
    return (big_x, big_d, big_y, big_b, big_c, big_a)


def check_all_symmetry(family: NormalizedFamily, tol: float = DEFAULT_TOLERANCE) -> ResidualReport:
    """Symmetry residual of every label tuple touching a stored symbol.

    Tuples where the test is not applicable are counted in ``vacuous_count``.
    """
    started = time.perf_counter()
    candidates: set[BlockKey] = set()
    for key in family.rules.admissible_blocks():
        candidates.update((key, symmetry_variants(key)[1], _inverse_third(key)))

    per_tuple: dict[tuple[int, ...], float] = {}
    skipped = 0
    for key in sorted(candidates):
        result = check_symmetry(family, key, tol)
        if result.residual is None:
            skipped += 1
        else:
            per_tuple[key] = result.residual
    log.debug("symmetry: %d tuples compared, %d not applicable", len(per_tuple), skipped)
    wall_ms = (time.perf_counter() - started) * 1000.0
    return ResidualReport(per_tuple, tol, skipped, "symmetry", wall_ms)
