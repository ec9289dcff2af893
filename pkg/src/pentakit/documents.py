"""Solution documents (JSON) and hand-written rules / weights files (YAML or JSON)."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np
from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

from .errors import DocumentError, PentaError
from .models import BlockKey, FSolution, FusionRules
from .normalized import WeightSystem

log = logging.getLogger(__name__)

FORMAT_VERSION = "1"
KINDS = ("F", "normalized", "tensor")


def _yaml() -> YAML:
    y = YAML()
    y.default_flow_style = None
    y.width = 120
    return y


@dataclass
class SolutionDocument:
    """A parsed solution file: colours, sparse dims, blocks and optional weights."""

    rules: FusionRules
    blocks: dict[BlockKey, np.ndarray]
    weights: WeightSystem | None = None
    kind: str = "F"
    format_version: str = FORMAT_VERSION
    source: Path | None = field(default=None, compare=False)

    def to_solution(self) -> FSolution:
        return FSolution.from_blocks(self.rules, self.blocks)


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def dumps_solution(
    sol: FSolution, weights: WeightSystem | None = None, kind: str = "F"
) -> str:
    """Canonical text of a solution: one dims entry and one block per line.

    Blocks are sorted by labels and coordinates are flattened row-major as
    [re, im] pairs printed with shortest round-trip floats.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown document kind {kind!r}")
    rules = sol.rules
    dims = [[int(a), int(b), int(c), int(rules.dims[a, b, c])] for a, b, c in zip(*np.nonzero(rules.dims))]
    lines = [
        "{",
        f'  "format_version": {json.dumps(FORMAT_VERSION)},',
        f'  "kind": {json.dumps(kind)},',
        f'  "colors": {json.dumps(list(rules.names), ensure_ascii=False)},',
    ]

    def listing(name: str, rows: list[str], last: bool) -> None:
        if not rows:
            lines.append(f'  "{name}": []' + ("" if last else ","))
            return
        lines.append(f'  "{name}": [')
        lines.extend(f"    {row}," for row in rows[:-1])
        lines.append(f"    {rows[-1]}")
        lines.append("  ]" + ("" if last else ","))

    listing("dims", [json.dumps(row) for row in dims], last=False)
    block_rows = [
        json.dumps(
            {
                "labels": [int(v) for v in block.labels],
                "coords": [_pair(z) for z in block.coords.ravel()],
            },
            allow_nan=False,
        )
        for block in sol.blocks()
    ]
    listing("blocks", block_rows, last=weights is None)
    if weights is not None:
        weights.check(rules)
        listing(
            "weights",
            [json.dumps([i, *_pair(w)], allow_nan=False) for i, w in enumerate(weights.values)],
            last=True,
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_solution(
    sol: FSolution, path: Path | str, weights: WeightSystem | None = None, kind: str = "F"
) -> None:
    text = dumps_solution(sol, weights, kind)
    Path(path).write_text(text, encoding="utf-8")
    log.debug("wrote %d blocks to %s", len(sol), path)


def _locate(text: str, *keys: str | int) -> int | None:
    """1-based line of a node in the document, via ruamel's position tracking."""
    try:
        node = YAML().load(text)
        for key in keys[:-1]:
            node = node[key]
        line, _ = node.lc.item(keys[-1]) if isinstance(keys[-1], int) else node.lc.key(keys[-1])
        return line + 1
    except Exception:
        return None


def _number(value: Any, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{what} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ValueError(f"{what} is not finite")
    return float(value)


def _complex(value: Any, what: str) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"{what} must be an [re, im] pair")
        return complex(_number(value[0], what), _number(value[1], what))
    return complex(_number(value, what), 0.0)


def loads_solution(text: str, source: Path | None = None) -> SolutionDocument:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(data, dict):
        raise DocumentError("document must be a JSON object", line=1)

    version = str(data.get("format_version", ""))
    if version != FORMAT_VERSION:
        raise DocumentError(f"unsupported format_version {version!r}", line=_locate(text, "format_version"))
    kind = data.get("kind", "F")
    if kind not in KINDS:
        raise DocumentError(f"unknown kind {kind!r}", line=_locate(text, "kind"))

    names = data.get("colors")
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise DocumentError("colors must be a list of names", line=_locate(text, "colors"))
    size = len(names)
    dims = np.zeros((size, size, size), dtype=np.int64)
    seen: set[tuple[int, int, int]] = set()
    for k, entry in enumerate(data.get("dims", [])):
        ok = (
            isinstance(entry, list)
            and len(entry) == 4
            and all(isinstance(v, int) and not isinstance(v, bool) for v in entry)
        )
        if not ok or not all(0 <= v < size for v in entry[:3]) or entry[3] <= 0:
            raise DocumentError(f"bad dims entry {entry!r}", line=_locate(text, "dims", k))
        triple = (entry[0], entry[1], entry[2])
        if triple in seen:
            named = [names[v] for v in triple]
            raise DocumentError(f"dims entry for {named} appears twice", line=_locate(text, "dims", k))
        seen.add(triple)
        dims[triple] = entry[3]
    try:
        rules = FusionRules(dims, tuple(names))
    except PentaError as exc:
        raise DocumentError(str(exc), line=_locate(text, "colors")) from None

    blocks: dict[BlockKey, np.ndarray] = {}
    for k, entry in enumerate(data.get("blocks", [])):
        labels = entry.get("labels") if isinstance(entry, dict) else None
        if not (isinstance(labels, list) and len(labels) == 6 and all(isinstance(v, int) and not isinstance(v, bool) for v in labels)):
            raise DocumentError("block labels must be six colour indices", line=_locate(text, "blocks", k))
        key = tuple(labels)
        named = tuple(names[v] if 0 <= v < size else str(v) for v in key)
        if not all(0 <= v < size for v in key):
            raise DocumentError(f"block {named} refers to an unknown colour", _locate(text, "blocks", k), named)
        if key in blocks:
            raise DocumentError(f"block {named} appears twice", _locate(text, "blocks", k), named)
        shape = rules.block_shape(*key)
        coords = entry.get("coords")
        size_expected = int(np.prod(shape))
        if size_expected == 0:
            raise DocumentError(f"block {named} touches a zero-dimensional module", _locate(text, "blocks", k), named)
        if not isinstance(coords, list) or len(coords) != size_expected:
            count = len(coords) if isinstance(coords, list) else 0
            raise DocumentError(
                f"block {named} has {count} coordinates, expected {size_expected} for shape {shape}",
                _locate(text, "blocks", k),
                named,
            )
        try:
            values = [_complex(z, "coordinate") for z in coords]
        except ValueError as exc:
            raise DocumentError(f"block {named}: {exc}", _locate(text, "blocks", k), named) from None
        blocks[key] = np.array(values, dtype=np.complex128).reshape(shape)

    weights = None
    if "weights" in data:
        values: dict[int, complex] = {}
        for k, entry in enumerate(data["weights"]):
            try:
                if not (isinstance(entry, list) and len(entry) == 3 and isinstance(entry[0], int)):
                    raise ValueError("weights entries are [label, re, im]")
                values[entry[0]] = _complex(entry[1:], "weight")
            except ValueError as exc:
                raise DocumentError(str(exc), line=_locate(text, "weights", k)) from None
        try:
            weights = WeightSystem.from_mapping(rules, values)
        except PentaError as exc:
            raise DocumentError(str(exc), line=_locate(text, "weights")) from None

    log.debug("parsed %d blocks over %d colours", len(blocks), size)
    return SolutionDocument(rules, blocks, weights, kind, version, source)


def read_document(path: Path | str) -> SolutionDocument:
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        text = f.read()
    return loads_solution(text, path)


def load_solution(path: Path | str) -> tuple[FSolution, WeightSystem | None]:
    """Load an F-solution document; normalized or tensor documents are refused."""
    doc = read_document(path)
    if doc.kind != "F":
        raise DocumentError(f"{path} holds {doc.kind} data, not F-symbols")
    return doc.to_solution(), doc.weights


def _load_yaml(path: Path) -> Any:
    try:
        with open(path, encoding="utf-8") as f:
            return _yaml().load(f)
    except YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise DocumentError(f"cannot parse {path.name}: {getattr(exc, 'problem', exc)}",
                            line=mark.line + 1 if mark else None) from None


def _line_of(node: Any, key: str | int) -> int | None:
    try:
        line, _ = node.lc.item(key) if isinstance(key, int) else node.lc.key(key)
        return line + 1
    except Exception:
        return None


def _colour(names: list[str], value: Any, line: int | None) -> int:
    """A colour by name, or by index when no colour carries that name."""
    if str(value) in names:
        return names.index(str(value))
    if isinstance(value, int) and not isinstance(value, bool) and 0 <= value < len(names):
        return value
    raise DocumentError(f"unknown colour {value!r}", line=line)


def load_rules(path: Path | str) -> FusionRules:
    """Read fusion rules from a YAML or JSON file.

    The file lists ``colors`` and ``fusion`` entries [a, b, c] or [a, b, c, N]
    meaning N[a][b][c] = N (default 1); colours are given by name or index.
    """
    path = Path(path)
    data = _load_yaml(path)
    if not isinstance(data, dict) or "colors" not in data:
        raise DocumentError(f"{path.name} must be a mapping with a colors list", line=1)
    names = [str(n) for n in data["colors"]]
    entries = []
    fusion = data.get("fusion", data.get("dims", []))
    for k, entry in enumerate(fusion):
        line = _line_of(fusion, k)
        if not isinstance(entry, (list, tuple)) or len(entry) not in (3, 4):
            raise DocumentError("fusion entries are [a, b, c] or [a, b, c, N]", line=line)
        a, b, c = (_colour(names, v, line) for v in entry[:3])
        n = entry[3] if len(entry) == 4 else 1
        if isinstance(n, bool) or not isinstance(n, int) or n < 0:
            raise DocumentError(f"multiplicity must be a nonnegative integer, got {n!r}", line=line)
        entries.append((a, b, c, n))
    try:
        rules = FusionRules.from_entries(names, entries)
    except PentaError as exc:
        raise DocumentError(str(exc), line=_line_of(data, "colors")) from None
    log.debug("read %d colours, %d fusion entries from %s", rules.size, len(entries), path)
    return rules


def dump_rules(rules: FusionRules, path: Path | str) -> None:
    fusion = []
    for a, b, c in zip(*np.nonzero(rules.dims)):
        fusion.append([rules.names[a], rules.names[b], rules.names[c], int(rules.dims[a, b, c])])
    with open(path, "w", encoding="utf-8") as f:
        _yaml().dump({"colors": list(rules.names), "fusion": fusion}, f)


def load_weights(path: Path | str, rules: FusionRules) -> WeightSystem:
    """Read ``weights: {colour: value}`` where a value is a number or an [re, im] pair.

    A solution document with a weights list is accepted too.
    """
    path = Path(path)
    if path.suffix == ".json":
        try:
            doc = read_document(path)
        except DocumentError:
            doc = None
        if doc is not None:
            if doc.weights is None or len(doc.weights) != rules.size:
                raise DocumentError(f"{path.name} has no weights for {rules.size} colours")
            return doc.weights
    data = _load_yaml(path)
    table = data.get("weights") if isinstance(data, dict) else None
    if not isinstance(table, dict):
        raise DocumentError(f"{path.name} must contain a weights mapping", line=1)
    values = {}
    for key, value in table.items():
        line = _line_of(table, key)
        try:
            values[_colour(list(rules.names), key, line)] = _complex(value, "weight")
        except ValueError as exc:
            raise DocumentError(str(exc), line=line) from None
    try:
        return WeightSystem.from_mapping(rules, values)
    except PentaError as exc:
        raise DocumentError(str(exc), line=1) from None


def dump_cocycles(n: int, tables: Iterable[tuple[tuple[int, ...], np.ndarray]], path: Path | str) -> None:
    """Write exponent tables e(a, b, c) of cocycle representatives, keyed by class coordinates."""
    classes = [
        {"class": list(coords), "exponents": table.reshape(n, n, n).tolist()}
        for coords, table in tables
    ]
    with open(path, "w", encoding="utf-8") as f:
        _yaml().dump({"group": f"Z/{n}", "modulus": n, "classes": classes}, f)
