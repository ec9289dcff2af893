import json

import numpy as np
import numpy.testing as npt
import pytest

from pentakit.builders import fibonacci_rules
from pentakit.core import random_solution
from pentakit.documents import (
    dump_cocycles,
    dump_rules,
    dumps_solution,
    load_rules,
    load_solution,
    load_weights,
    loads_solution,
    read_document,
    save_solution,
)
from pentakit.errors import DocumentError
from pentakit.models import FSolution, FusionRules
from pentakit.normalized import WeightSystem

from conftest import random_rules

FIBONACCI_YAML = """\
colors: ["1", tau]
fusion:
  - ["1", "1", "1"]
  - ["1", tau, tau]
  - [tau, "1", tau]
  - [tau, tau, "1"]
  - [tau, tau, tau]
"""


@pytest.fixture
def multiplicity_solution(rng):
    rules = FusionRules(np.full((1, 1, 1), 2, dtype=int), ("s",))
    return random_solution(rules, rng)


def _line_containing(text, needle):
    return next(i for i, line in enumerate(text.splitlines(), 1) if needle in line)


def test_dump_is_canonical(rng):
    sol = random_solution(FusionRules(np.ones((2, 2, 2), dtype=int)), rng)
    text = dumps_solution(sol)
    assert text == dumps_solution(FSolution.from_blocks(sol.rules, dict(reversed(sol.block_dict().items()))))
    data = json.loads(text)
    assert list(data) == ["format_version", "kind", "colors", "dims", "blocks"]
    assert [block["labels"] for block in data["blocks"]] == [list(k) for k in sorted(sol.block_dict())]
    assert len(text.splitlines()) == 9 + len(data["dims"]) + len(data["blocks"])


def test_round_trip_is_bit_exact(rng):
    rules = random_rules(rng)
    sol = random_solution(rules, rng)
    weights = WeightSystem.random(rules, rng)
    doc = loads_solution(dumps_solution(sol, weights))
    assert doc.rules == rules
    assert doc.kind == "F"
    assert doc.weights == weights
    assert set(doc.blocks) == set(sol.block_dict())
    for key, coords in sol.block_dict().items():
        npt.assert_array_equal(doc.blocks[key], coords)


def test_save_and_load(tmp_path, z3_k1):
    path = tmp_path / "z3.json"
    save_solution(z3_k1, path)
    sol, weights = load_solution(path)
    assert weights is None
    assert sol.rules == z3_k1.rules
    assert read_document(path).source == path


def test_empty_solution_round_trips():
    rules = FusionRules(np.zeros((2, 2, 2), dtype=int), ("a", "b"))
    doc = loads_solution(dumps_solution(FSolution(rules, {})))
    assert doc.blocks == {}
    assert doc.rules == rules


def test_missing_coordinate_is_located(multiplicity_solution):
    text = dumps_solution(multiplicity_solution)
    lineno = _line_containing(text, '"labels"')
    lines = text.splitlines()
    block = json.loads(lines[lineno - 1].strip().rstrip(","))
    block["coords"].pop()
    lines[lineno - 1] = "    " + json.dumps(block)
    with pytest.raises(DocumentError) as info:
        loads_solution("\n".join(lines))
    assert info.value.line == lineno
    assert info.value.labels == ("s",) * 6
    assert "has 15 coordinates, expected 16" in str(info.value)


def test_non_finite_coordinate(trivial):
    text = dumps_solution(trivial).replace("[1.0, 0.0]", "[NaN, 0.0]")
    with pytest.raises(DocumentError, match="not finite") as info:
        loads_solution(text)
    assert info.value.line == _line_containing(text, "NaN")


@pytest.mark.parametrize(
    "text, line",
    [
        ('{"format_version": "1",\n  "kind": ,\n}', 2),
        ('{\n  "format_version": "2"\n}', 2),
        ('{\n  "format_version": "1",\n  "kind": "G",\n  "colors": []\n}', 3),
    ],
)
def test_header_errors(text, line):
    with pytest.raises(DocumentError) as info:
        loads_solution(text)
    assert info.value.line == line


def test_duplicate_and_unknown_blocks(trivial):
    text = dumps_solution(trivial)
    data = json.loads(text)
    data["blocks"].append(data["blocks"][0])
    with pytest.raises(DocumentError, match="twice"):
        loads_solution(json.dumps(data))
    data["blocks"][1] = {"labels": [0, 0, 0, 0, 0, 3], "coords": [[1.0, 0.0]]}
    with pytest.raises(DocumentError, match="unknown colour"):
        loads_solution(json.dumps(data))


def test_repeated_dims_entry_is_refused():
    text = (
        '{\n'
        '  "format_version": "1",\n'
        '  "kind": "F",\n'
        '  "colors": ["1"],\n'
        '  "dims": [\n'
        '    [0, 0, 0, 1],\n'
        '    [0, 0, 0, 1]\n'
        '  ],\n'
        '  "blocks": []\n'
        '}\n'
    )
    with pytest.raises(DocumentError, match="appears twice") as info:
        loads_solution(text)
    assert info.value.line == 7


def test_boolean_labels_are_refused(trivial):
    data = json.loads(dumps_solution(trivial))
    data["blocks"][0]["labels"] = [True, 0, 0, 0, 0, 0]
    with pytest.raises(DocumentError, match="six colour indices"):
        loads_solution(json.dumps(data))
    data["dims"][0][0] = False
    with pytest.raises(DocumentError, match="bad dims entry"):
        loads_solution(json.dumps(data))


def test_other_kinds_are_refused(tmp_path, trivial):
    path = tmp_path / "tensor.json"
    save_solution(trivial, path, kind="tensor")
    assert read_document(path).kind == "tensor"
    with pytest.raises(DocumentError, match="tensor"):
        load_solution(path)
    with pytest.raises(ValueError):
        dumps_solution(trivial, kind="matrix")


def test_yaml_rules(tmp_path):
    path = tmp_path / "fib.yaml"
    path.write_text(FIBONACCI_YAML, encoding="utf-8")
    assert load_rules(path) == fibonacci_rules()


def test_rules_by_index_and_multiplicity(tmp_path):
    path = tmp_path / "rules.yaml"
    path.write_text("colors: [a, b]\nfusion:\n  - [0, 0, 0]\n  - [b, b, a, 2]\n", encoding="utf-8")
    rules = load_rules(path)
    assert rules.dim(0, 0, 0) == 1
    assert rules.dim(1, 1, 0) == 2
    assert not rules.multiplicity_free


def test_bad_rules_are_located(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text('colors: ["1", tau]\nfusion:\n  - ["1", "1", "1"]\n  - [tau, sigma, tau]\n', encoding="utf-8")
    with pytest.raises(DocumentError, match="sigma") as info:
        load_rules(path)
    assert info.value.line == 4
    path.write_text("colors: [a]\nfusion:\n  - [a, a]\n", encoding="utf-8")
    with pytest.raises(DocumentError) as info:
        load_rules(path)
    assert info.value.line == 3
    path.write_text("fusion: []\n", encoding="utf-8")
    with pytest.raises(DocumentError, match="colors"):
        load_rules(path)


def test_dump_rules_round_trip(tmp_path):
    path = tmp_path / "rules.yaml"
    dump_rules(fibonacci_rules(), path)
    assert load_rules(path) == fibonacci_rules()


def test_yaml_weights(tmp_path):
    rules = fibonacci_rules()
    path = tmp_path / "weights.yaml"
    path.write_text("weights:\n  '1': 1.0\n  tau: [1.618, 0.5]\n", encoding="utf-8")
    assert load_weights(path, rules).values == (1.0, complex(1.618, 0.5))
    path.write_text("weights:\n  '1': 1.0\n", encoding="utf-8")
    with pytest.raises(DocumentError, match="tau"):
        load_weights(path, rules)
    path.write_text("weights:\n  '1': 1.0\n  tau: 0\n", encoding="utf-8")
    with pytest.raises(DocumentError, match="vanishes"):
        load_weights(path, rules)


def test_weights_from_solution_document(tmp_path, z3_k1):
    weights = WeightSystem((1.0, 2.0, 3.0))
    path = tmp_path / "z3.json"
    save_solution(z3_k1, path, weights)
    assert load_weights(path, z3_k1.rules) == weights
    save_solution(z3_k1, path)
    with pytest.raises(DocumentError, match="no weights"):
        load_weights(path, z3_k1.rules)


def test_dump_cocycles(tmp_path):
    path = tmp_path / "cocycles.yaml"
    dump_cocycles(2, [((0,), np.zeros(8, dtype=int)), ((1,), np.arange(8) % 2)], path)
    text = path.read_text(encoding="utf-8")
    assert "Z/2" in text
    assert text.count("class:") == 2
