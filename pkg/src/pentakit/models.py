"""Data models: colour labels, fusion dimensions, block maps, direct-sum vectors, reports.

Conventions used throughout the package:

* V_ab^c is the module of the coloured triangle (a, b, c); its dimension is
  ``rules.dims[a, b, c]`` and it carries the standard basis 0..N-1.
* The block F_abc^d|^x_y maps V_xc^d (x) V_ab^x to V_ay^d (x) V_bc^y and is
  stored as ``coords[i, j, r, s]`` with i, j indexing the source factors and
  r, s the target factors, so that ``F(e_i (x) f_j) = sum R[i, j, r, s] g_r (x) h_s``.
* Blocks touching a zero-dimensional module are never stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterator, Mapping, Union

import numpy as np

from .errors import InvalidLabelError, ShapeError

BlockKey = tuple[int, int, int, int, int, int]  # (a, b, c, d, x, y)
MapKey = tuple[int, int, int, int]  # (a, b, c, d)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Label:
    """A colour of the finite set I."""

    index: int
    name: str = ""

    def __str__(self) -> str:
        return self.name or str(self.index)


LabelLike = Union[int, Label]


def label_index(label: LabelLike) -> int:
    return label.index if isinstance(label, Label) else int(label)


@dataclass(frozen=True, eq=False)
class FusionRules:
    """The colour set I and the dimension table N[a][b][c] = dim V_ab^c."""

    dims: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        dims = np.asarray(self.dims)
        if dims.ndim != 3 or len(set(dims.shape)) != 1:
            raise ShapeError(f"dimension table must be cubic, got shape {dims.shape}")
        if dims.size and not np.issubdtype(dims.dtype, np.integer):
            if not np.all(np.equal(np.mod(dims, 1), 0)):
                raise ShapeError("dimension table entries must be integers")
        dims = dims.astype(np.int64)
        if np.any(dims < 0):
            raise ShapeError("dimension table entries must be nonnegative")
        object.__setattr__(self, "dims", _frozen(dims))
        names = tuple(self.names) or tuple(str(i) for i in range(dims.shape[0]))
        if len(names) != dims.shape[0]:
            raise ShapeError(f"{len(names)} names given for {dims.shape[0]} colours")
        if len(set(names)) != len(names):
            raise ShapeError("colour names must be unique")
        object.__setattr__(self, "names", names)

    @classmethod
    def from_entries(
        cls, names: list[str] | tuple[str, ...], entries: list[tuple[int, int, int, int]]
    ) -> FusionRules:
        """Build rules from a sparse list of (a, b, c, N) with label indices."""
        n = len(names)
        dims = np.zeros((n, n, n), dtype=np.int64)
        for a, b, c, dim in entries:
            for label in (a, b, c):
                if not 0 <= label < n:
                    raise InvalidLabelError(f"label {label} outside 0..{n - 1}")
            dims[a, b, c] = dim
        return cls(dims, tuple(names))

    @classmethod
    def from_table(cls, dims, names: list[str] | tuple[str, ...] = ()) -> FusionRules:
        return cls(np.asarray(dims), tuple(names))

    @property
    def size(self) -> int:
        return int(self.dims.shape[0])

    @property
    def labels(self) -> tuple[Label, ...]:
        return tuple(Label(i, name) for i, name in enumerate(self.names))

    @property
    def multiplicity_free(self) -> bool:
        return bool(np.all(self.dims <= 1))

    def check(self, *labels: LabelLike) -> tuple[int, ...]:
        out = []
        for label in labels:
            index = label_index(label)
            if not 0 <= index < self.size:
                raise InvalidLabelError(f"label {index} outside 0..{self.size - 1}")
            out.append(index)
        return tuple(out)

    def dim(self, a: LabelLike, b: LabelLike, c: LabelLike) -> int:
        a, b, c = self.check(a, b, c)
        return int(self.dims[a, b, c])

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InvalidLabelError(f"unknown colour {name!r}") from None

    def label(self, name: str) -> Label:
        return Label(self.index_of(name), name)

    def block_shape(self, a: int, b: int, c: int, d: int, x: int, y: int) -> tuple[int, int, int, int]:
        """Shape of F_abc^d|^x_y: (N[x][c][d], N[a][b][x], N[a][y][d], N[b][c][y])."""
        n = self.dims
        return (int(n[x, c, d]), int(n[a, b, x]), int(n[a, y, d]), int(n[b, c, y]))

    def admissible_blocks(self) -> Iterator[BlockKey]:
        """All (a, b, c, d, x, y) whose block has no zero-dimensional factor, lexicographically."""
        r = range(self.size)
        for a in r:
            for b in r:
                for c in r:
                    for d in r:
                        for x in r:
                            for y in r:
                                if 0 not in self.block_shape(a, b, c, d, x, y):
                                    yield (a, b, c, d, x, y)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FusionRules):
            return NotImplemented
        return self.names == other.names and np.array_equal(self.dims, other.dims)

    def __hash__(self) -> int:
        return hash((self.names, self.dims.tobytes()))


@dataclass(frozen=True, eq=False)
class FBlock:
    """One component F_abc^d|^x_y stored as the coefficient array R[i, j, r, s]."""

    labels: BlockKey
    coords: np.ndarray

    def __post_init__(self) -> None:
        labels = tuple(int(v) for v in self.labels)
        if len(labels) != 6:
            raise ShapeError(f"a block needs six labels, got {labels}")
        object.__setattr__(self, "labels", labels)
        coords = np.asarray(self.coords, dtype=np.complex128)
        if coords.ndim != 4:
            raise ShapeError(f"block {labels} must be a 4-index array, got ndim {coords.ndim}")
        if coords.size == 0:
            raise ShapeError(f"block {labels} touches a zero-dimensional module; leave it absent")
        if not np.all(np.isfinite(coords)):
            raise ShapeError(f"block {labels} has non-finite coordinates")
        object.__setattr__(self, "coords", _frozen(coords))

    @property
    def outer(self) -> MapKey:
        return self.labels[:4]

    @property
    def inner(self) -> tuple[int, int]:
        return self.labels[4], self.labels[5]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coords.shape


@dataclass(frozen=True, eq=False)
class FMap:
    """The map F_abc^d as its family of (x, y) components; a missing key is a zero component."""

    labels: MapKey
    blocks: Mapping[tuple[int, int], FBlock] = field(default_factory=dict)

    def __post_init__(self) -> None:
        labels = tuple(int(v) for v in self.labels)
        object.__setattr__(self, "labels", labels)
        for key, block in self.blocks.items():
            if block.outer != labels:
                raise ShapeError(f"block {block.labels} stored under map {labels}")
            if tuple(key) != block.inner:
                raise ShapeError(f"block {block.labels} stored under key {key}")
        ordered = dict(sorted(self.blocks.items()))
        object.__setattr__(self, "blocks", MappingProxyType(ordered))

    def block(self, x: int, y: int) -> np.ndarray | None:
        found = self.blocks.get((x, y))
        return None if found is None else found.coords


@dataclass(frozen=True, eq=False)
class FSolution:
    """A candidate solution: the family {F_abc^d} over the rules' colour set."""

    rules: FusionRules
    family: Mapping[MapKey, FMap] = field(default_factory=dict)

    def __post_init__(self) -> None:
        lookup: dict[BlockKey, FBlock] = {}
        for key, fmap in self.family.items():
            if tuple(key) != fmap.labels:
                raise ShapeError(f"map {fmap.labels} stored under key {key}")
            for block in fmap.blocks.values():
                self.rules.check(*block.labels)
                expected = self.rules.block_shape(*block.labels)
                if block.shape != expected:
                    raise ShapeError(
                        f"block {block.labels} has shape {block.shape}, expected {expected}"
                    )
                lookup[block.labels] = block
        family = {key: fmap for key, fmap in sorted(self.family.items()) if fmap.blocks}
        object.__setattr__(self, "family", MappingProxyType(family))
        object.__setattr__(self, "_lookup", dict(sorted(lookup.items())))

    @classmethod
    def from_blocks(
        cls, rules: FusionRules, blocks: Mapping[BlockKey, np.ndarray]
    ) -> FSolution:
        """Build a solution from a mapping (a, b, c, d, x, y) -> coefficient array."""
        grouped: dict[MapKey, dict[tuple[int, int], FBlock]] = {}
        for labels, coords in blocks.items():
            block = FBlock(tuple(labels), coords)
            grouped.setdefault(block.outer, {})[block.inner] = block
        family = {key: FMap(key, inner) for key, inner in grouped.items()}
        return cls(rules, family)

    def block(self, a: int, b: int, c: int, d: int, x: int, y: int) -> np.ndarray | None:
        found = self._lookup.get((a, b, c, d, x, y))
        return None if found is None else found.coords

    def fmap(self, a: int, b: int, c: int, d: int) -> FMap:
        return self.family.get((a, b, c, d)) or FMap((a, b, c, d), {})

    def blocks(self) -> Iterator[FBlock]:
        """Stored blocks in lexicographic label order."""
        yield from self._lookup.values()

    def block_dict(self) -> dict[BlockKey, np.ndarray]:
        return {key: block.coords for key, block in self._lookup.items()}

    def replace_block(self, labels: BlockKey, coords: np.ndarray) -> FSolution:
        """A copy with one block replaced (or added)."""
        blocks = self.block_dict()
        blocks[tuple(labels)] = coords
        return FSolution.from_blocks(self.rules, blocks)

    def __len__(self) -> int:
        return len(self._lookup)


ModuleTemplate = tuple[Union[int, str], Union[int, str], Union[int, str]]


@dataclass(frozen=True)
class SumLayout:
    """Shape descriptor of a direct sum of tensor products of modules.

    ``keys`` names the free summand labels, ``factors`` lists the tensor
    factors as (a, b, c) templates in which a string refers to a key. For the
    source of the pentagon relation, ``keys=("x", "y")`` and
    ``factors=(("y", d, e), ("x", c, "y"), (a, b, "x"))``.
    """

    keys: tuple[str, ...]
    factors: tuple[ModuleTemplate, ...]

    def modules(self, key: tuple[int, ...]) -> tuple[tuple[int, int, int], ...]:
        values = dict(zip(self.keys, key))
        return tuple(
            tuple(values[part] if isinstance(part, str) else int(part) for part in factor)
            for factor in self.factors
        )

    def shape(self, rules: FusionRules, key: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(int(rules.dims[m]) for m in self.modules(key))

    def summands(self, rules: FusionRules) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
        """Nonzero summands (key, shape) in lexicographic key order."""
        for key in np.ndindex(*(rules.size,) * len(self.keys)):
            shape = self.shape(rules, key)
            if 0 not in shape:
                yield tuple(int(k) for k in key), shape

    def total_dim(self, rules: FusionRules) -> int:
        return sum(int(np.prod(shape)) for _, shape in self.summands(rules))


@dataclass(frozen=True, eq=False)
class SumVector:
    """An element of a direct sum, stored summand by summand.

    Entries may carry trailing batch axes (identical for every entry); a
    batched vector pushes many vectors, e.g. all basis vectors, through a
    map at once.
    """

    rules: FusionRules
    layout: SumLayout
    entries: Mapping[tuple[int, ...], np.ndarray] = field(default_factory=dict)
    batch_shape: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        checked: dict[tuple[int, ...], np.ndarray] = {}
        n_factors = len(self.layout.factors)
        for key, value in self.entries.items():
            key = tuple(int(k) for k in key)
            value = np.asarray(value, dtype=np.complex128)
            expected = self.layout.shape(self.rules, key)
            if 0 in expected:
                raise ShapeError(f"summand {key} is zero-dimensional and must be absent")
            if value.shape[:n_factors] != expected or value.shape[n_factors:] != tuple(self.batch_shape):
                raise ShapeError(
                    f"summand {key} has shape {value.shape}, "
                    f"expected {expected} + batch {tuple(self.batch_shape)}"
                )
            checked[key] = _frozen(value)
        object.__setattr__(self, "entries", MappingProxyType(dict(sorted(checked.items()))))
        object.__setattr__(self, "batch_shape", tuple(self.batch_shape))

    def component(self, *key: int) -> np.ndarray:
        """The summand at ``key``; zeros when it is not stored."""
        key = tuple(key)
        if key in self.entries:
            return self.entries[key]
        return np.zeros(self.layout.shape(self.rules, key) + self.batch_shape, dtype=np.complex128)

    def __add__(self, other: SumVector) -> SumVector:
        if other.layout != self.layout or other.batch_shape != self.batch_shape:
            raise ShapeError("cannot add vectors of different direct sums")
        keys = set(self.entries) | set(other.entries)
        return SumVector(
            self.rules,
            self.layout,
            {k: self.component(*k) + other.component(*k) for k in keys},
            self.batch_shape,
        )

    def scale(self, factor: complex) -> SumVector:
        return SumVector(
            self.rules,
            self.layout,
            {k: factor * v for k, v in self.entries.items()},
            self.batch_shape,
        )


@dataclass(frozen=True)
class ResidualReport:
    """Per-tuple max-abs residuals of one sweep."""

    per_tuple: Mapping[tuple[int, ...], float]
    tolerance: float
    vacuous_count: int = 0
    form: str = "global"
    wall_ms: float = 0.0

    @property
    def overall(self) -> float:
        return max(self.per_tuple.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.overall <= self.tolerance

    @property
    def tuples_checked(self) -> int:
        return len(self.per_tuple)

    def worst(self, count: int = 10) -> list[tuple[tuple[int, ...], float]]:
        ranked = sorted(self.per_tuple.items(), key=lambda item: (-item[1], item[0]))
        return ranked[:count]
