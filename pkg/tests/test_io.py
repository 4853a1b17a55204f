import json

import numpy as np
import pytest

from cdsc.budget import TestIndex
from cdsc.errors import InvalidParameter
from cdsc.io import (
    dataset_to_csv,
    dumps,
    dumps_line,
    fmt_float,
    load_dataset,
    load_edges,
    load_expertise,
    load_model,
    model_from_json,
    model_to_json,
    pattern_from_json,
    pattern_to_json,
    write_csv,
)
from cdsc.model import joint_from_net, or_gate_model, random_cpts, sample_dataset
from cdsc.patterns import Pattern, enumerate_dags, patterns_equal


def test_floats_round_trip_exactly():
    for x in (0.1, 1 / 3, 9563968.123456789, 1e-300, 2.0**60):
        assert float(fmt_float(x)) == x
    doc = {"a": 0.1, "b": [1 / 3, 2], "c": {"d": None, "e": True}}
    assert json.loads(dumps(doc)) == doc
    assert "\n" not in dumps_line(doc)


def test_write_csv_cells():
    text = write_csv(["a", "b", "c"], [[True, 0.5, None]])
    assert text == "a,b,c\ntrue,0.5,\n"


def test_model_round_trip(tmp_path, chain):
    for net in (or_gate_model(3, 0.6), chain):
        path = tmp_path / "m.json"
        path.write_text(dumps(model_to_json(net)))
        back = load_model(path)
        assert back.dag.edges == net.dag.edges
        np.testing.assert_array_equal(joint_from_net(back).flat, joint_from_net(net).flat)


def test_model_json_is_one_based():
    doc = model_to_json(or_gate_model(3, 0.6))
    assert doc["edges"] == [[1, 3], [2, 3]]
    assert set(doc["cpts"]) == {"1", "2", "3"}


def test_malformed_model():
    with pytest.raises(InvalidParameter):
        model_from_json({"variables": []})


def test_dataset_round_trip(tmp_path, or3):
    data = sample_dataset(or3, 200, seed=1)
    path = tmp_path / "d.csv"
    path.write_text(dataset_to_csv(data))
    back = load_dataset(path)
    np.testing.assert_array_equal(back.rows, data.rows)
    assert [v.card for v in back.variables] == [2, 2, 2]
    again = load_dataset(path, or3.variables)
    np.testing.assert_array_equal(again.rows, data.rows)


def test_dataset_column_mismatch(tmp_path, or3):
    path = tmp_path / "d.csv"
    path.write_text("A,B,C\n0,1,1\n")
    with pytest.raises(InvalidParameter):
        load_dataset(path, or3.variables)


def test_pattern_round_trip():
    p = Pattern(4, frozenset({(0, 3), (1, 3)}), frozenset({(0, 2)}))
    doc = pattern_to_json(p)
    assert doc["directed"] == [[1, 4], [2, 4]]
    assert patterns_equal(pattern_from_json(json.loads(dumps(doc))), p)


def test_load_expertise(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({
        "tests": [{"pair": [1, 2], "cond": [], "independent": True}, {"pair": [1, 3], "cond": [2]}],
        "max_cond": 1,
        "known_edges": [[2, 3]],
    }))
    s, answers = load_expertise(path)
    assert TestIndex((0, 1), ()) in s and TestIndex((0, 2), (1,)) in s
    assert TestIndex((1, 2), ()) in s  # known edge
    assert TestIndex((0, 3), (1, 2)) in s  # above the sparsity cap
    assert TestIndex((0, 3), (1,)) not in s
    assert answers == {TestIndex((0, 1), ()): True}
    path.write_text(json.dumps([{"pair": [2, 1]}]))
    s, _ = load_expertise(path)
    assert TestIndex((0, 1), ()) in s


def test_load_edges(tmp_path):
    path = tmp_path / "e.json"
    path.write_text("[[1, 3], [2, 3]]")
    assert load_edges(path) == [(0, 2), (1, 2)]
    path.write_text('{"edges": [[3, 1]]}')
    assert load_edges(path) == [(2, 0)]


def test_random_model_json_survives(tmp_path):
    net = random_cpts(enumerate_dags(4)[200], seed=4)
    path = tmp_path / "m.json"
    path.write_text(dumps(model_to_json(net)))
    np.testing.assert_array_equal(joint_from_net(load_model(path)).flat, joint_from_net(net).flat)
