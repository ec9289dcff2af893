"""Elementary maps on block data: identity, block application, P23, matrix assembly."""

from __future__ import annotations

import logging
from typing import Mapping

import numpy as np

from .errors import EmptyModuleError, ShapeError
from .models import (
    FBlock,
    FMap,
    FSolution,
    FusionRules,
    LabelLike,
    MapKey,
    SumLayout,
    SumVector,
)

log = logging.getLogger(__name__)


def hom_dim(rules: FusionRules, a: LabelLike, b: LabelLike, c: LabelLike) -> int:
    """Dimension of V_ab^c."""
    return rules.dim(a, b, c)


def identity_component(rules: FusionRules, a: LabelLike, b: LabelLike, c: LabelLike) -> np.ndarray:
    """Identity matrix on V_ab^c."""
    n = rules.dim(a, b, c)
    if n == 0:
        raise EmptyModuleError(f"V_{a}{b}^{c} is zero-dimensional")
    return np.eye(n, dtype=np.complex128)


def block_apply(block: FBlock | np.ndarray, v: np.ndarray) -> np.ndarray:
    """out[r, s] = sum_ij R[i, j, r, s] v[i, j]; trailing batch axes of ``v`` are carried."""
    coords = block.coords if isinstance(block, FBlock) else np.asarray(block)
    v = np.asarray(v)
    if v.ndim < 2 or v.shape[:2] != coords.shape[:2]:
        raise ShapeError(f"vector of shape {v.shape} does not fit block source {coords.shape[:2]}")
    return np.tensordot(coords, v, axes=([0, 1], [0, 1]))


def source_layout(a: int, b: int, c: int, d: int) -> SumLayout:
    """⊕_x V_xc^d (x) V_ab^x."""
    return SumLayout(("x",), (("x", c, d), (a, b, "x")))


def target_layout(a: int, b: int, c: int, d: int) -> SumLayout:
    """⊕_y V_ay^d (x) V_bc^y."""
    return SumLayout(("y",), ((a, "y", d), (b, c, "y")))


def fmap_apply(m: FMap, alpha: SumVector) -> SumVector:
    a, b, c, d = m.labels
    if alpha.layout != source_layout(a, b, c, d):
        raise ShapeError(f"vector layout {alpha.layout} is not the source of F_{m.labels}")
    out: dict[tuple[int, ...], np.ndarray] = {}
    for (x, y), block in m.blocks.items():
        if (x,) not in alpha.entries:
            continue
        term = block_apply(block, alpha.entries[(x,)])
        out[(y,)] = out[(y,)] + term if (y,) in out else term
    return SumVector(alpha.rules, target_layout(a, b, c, d), out, alpha.batch_shape)


def permute_23(alpha: SumVector) -> SumVector:
    """Swap the second and third tensor factors of every summand."""
    if len(alpha.layout.factors) != 3:
        raise ShapeError("P23 needs three tensor factors per summand")
    f0, f1, f2 = alpha.layout.factors
    layout = SumLayout(alpha.layout.keys, (f0, f2, f1))
    entries = {key: np.swapaxes(value, 1, 2) for key, value in alpha.entries.items()}
    return SumVector(alpha.rules, layout, entries, alpha.batch_shape)


def summand_offsets(rules: FusionRules, layout: SumLayout) -> dict[tuple[int, ...], tuple[int, int]]:
    """(begin, end) of every nonzero summand in the flattened direct sum."""
    offsets = {}
    begin = 0
    for key, shape in layout.summands(rules):
        end = begin + int(np.prod(shape))
        offsets[key] = (begin, end)
        begin = end
    return offsets


def flatten_sum(v: SumVector) -> np.ndarray:
    """Concatenate summands in lexicographic key order, each flattened row-major."""
    n_factors = len(v.layout.factors)
    parts = []
    for key, shape in v.layout.summands(v.rules):
        entry = v.component(*key)
        parts.append(entry.reshape((int(np.prod(shape)),) + entry.shape[n_factors:]))
    if not parts:
        return np.zeros((0,) + v.batch_shape, dtype=np.complex128)
    return np.concatenate(parts, axis=0)


def unflatten_sum(rules: FusionRules, layout: SumLayout, flat: np.ndarray) -> SumVector:
    flat = np.asarray(flat, dtype=np.complex128)
    offsets = summand_offsets(rules, layout)
    total = offsets[max(offsets)][1] if offsets else 0
    if flat.shape[:1] != (total,):
        raise ShapeError(f"flat vector of length {flat.shape[:1]} for a direct sum of dimension {total}")
    batch = flat.shape[1:]
    entries = {
        key: flat[begin:end].reshape(layout.shape(rules, key) + batch)
        for key, (begin, end) in offsets.items()
    }
    return SumVector(rules, layout, entries, batch)


def basis_batch(rules: FusionRules, layout: SumLayout) -> SumVector:
    """All basis vectors at once: a batched vector whose flattening is the identity matrix."""
    total = layout.total_dim(rules)
    return unflatten_sum(rules, layout, np.eye(total, dtype=np.complex128))


def assemble_matrix(m: FMap, rules: FusionRules) -> np.ndarray:
    """Full matrix of F_abc^d from ⊕_x V_xc^d (x) V_ab^x to ⊕_y V_ay^d (x) V_bc^y.

    Rows follow the target summands y, columns the source summands x, both in
    increasing label index and row-major inside a block, so that
    ``assemble_matrix(m) @ flatten_sum(alpha) == flatten_sum(fmap_apply(m, alpha))``.
    """
    a, b, c, d = m.labels
    rows = summand_offsets(rules, target_layout(a, b, c, d))
    cols = summand_offsets(rules, source_layout(a, b, c, d))
    n_rows = max((end for _, end in rows.values()), default=0)
    n_cols = max((end for _, end in cols.values()), default=0)
    matrix = np.zeros((n_rows, n_cols), dtype=np.complex128)
    for (x, y), block in m.blocks.items():
        i0, i1 = cols[(x,)]
        r0, r1 = rows[(y,)]
        src = i1 - i0
        dst = r1 - r0
        # R[i, j, r, s] -> matrix[(r, s), (i, j)]
        matrix[r0:r1, i0:i1] = block.coords.reshape(src, dst).T
    return matrix


def disassemble_matrix(
    rules: FusionRules, labels: MapKey, matrix: np.ndarray, keep_zero: bool = False
) -> FMap:
    """Inverse of assemble_matrix; all-zero blocks are dropped unless ``keep_zero``."""
    a, b, c, d = labels
    rows = summand_offsets(rules, target_layout(a, b, c, d))
    cols = summand_offsets(rules, source_layout(a, b, c, d))
    matrix = np.asarray(matrix, dtype=np.complex128)
    expected = (
        max((end for _, end in rows.values()), default=0),
        max((end for _, end in cols.values()), default=0),
    )
    if matrix.shape != expected:
        raise ShapeError(f"matrix of F_{tuple(labels)} must have shape {expected}, got {matrix.shape}")
    blocks = {}
    for (x,), (i0, i1) in cols.items():
        for (y,), (r0, r1) in rows.items():
            piece = matrix[r0:r1, i0:i1]
            if not keep_zero and not np.any(piece):
                continue
            shape = rules.block_shape(a, b, c, d, x, y)
            blocks[(x, y)] = FBlock((a, b, c, d, x, y), piece.T.reshape(shape))
    return FMap(tuple(labels), blocks)


def solution_from_matrices(
    rules: FusionRules, matrices: Mapping[MapKey, np.ndarray], keep_zero: bool = False
) -> FSolution:
    family = {
        tuple(labels): disassemble_matrix(rules, labels, matrix, keep_zero)
        for labels, matrix in matrices.items()
    }
    return FSolution(rules, family)


def map_keys(rules: FusionRules):
    """All (a, b, c, d) whose F-map has a nonzero source or target."""
    r = range(rules.size)
    for a in r:
        for b in r:
            for c in r:
                for d in r:
                    if source_layout(a, b, c, d).total_dim(rules) or target_layout(a, b, c, d).total_dim(rules):
                        yield (a, b, c, d)


def random_solution(
    rules: FusionRules, rng: np.random.Generator, scale: float = 1.0
) -> FSolution:
    """A family with every admissible block filled by uniform complex entries in [-scale, scale].

    The result is generally not a solution of the pentagon relation; it is
    the input for checking that the different forms of the relation agree.
    """
    blocks = {}
    for labels in rules.admissible_blocks():
        shape = rules.block_shape(*labels)
        blocks[labels] = scale * (
            rng.uniform(-1, 1, shape) + 1j * rng.uniform(-1, 1, shape)
        )
    log.debug("random family with %d blocks over %d colours", len(blocks), rules.size)
    return FSolution.from_blocks(rules, blocks)
