"""File formats. Node labels in every file are 1-based; in memory they are 0-based."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .budget import ExpertiseSet, TestIndex
from .errors import InvalidParameter
from .model import BayesNet, Dag, Dataset, Variable
from .patterns import Pattern


def fmt_float(x: float) -> str:
    """17 significant digits, so printed values round-trip exactly."""
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps(obj: Any, indent: int | None = 2) -> str:
    """JSON text with every float written at 17 significant digits."""

    def enc(o, level):
        pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
        end = "" if indent is None else "\n" + " " * (indent * level)
        sep = ", " if indent is None else ","
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return fmt_float(float(o))
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [pad + json.dumps(str(k)) + ": " + enc(v, level + 1) for k, v in o.items()]
            return "{" + sep.join(items) + end + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list, tuple)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[" + sep.join(pad + enc(v, level + 1) for v in o) + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0)


def dumps_line(obj: Any) -> str:
    return dumps(obj, indent=None)


def write_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, (float, np.floating)):
        return fmt_float(float(v))
    return v


# --- model JSON -------------------------------------------------------------


def model_to_json(net: BayesNet) -> dict:
    return {
        "variables": [{"name": v.name, "card": v.card} for v in net.variables],
        "edges": [[a + 1, b + 1] for a, b in sorted(net.dag.edges)],
        "cpts": {str(i + 1): net.cpts[i].tolist() for i in range(net.n)},
    }


def model_from_json(doc: dict) -> BayesNet:
    try:
        variables = tuple(Variable(v["name"], int(v["card"])) for v in doc["variables"])
        edges = frozenset((int(a) - 1, int(b) - 1) for a, b in doc["edges"])
        dag = Dag(variables, edges)
        cpts = tuple(np.asarray(doc["cpts"][str(i + 1)], dtype=float) for i in range(dag.n))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidParameter(f"malformed model JSON: {exc}") from exc
    return BayesNet(dag, cpts)


def load_model(path) -> BayesNet:
    return model_from_json(json.loads(Path(path).read_text()))


# --- dataset CSV ------------------------------------------------------------


def dataset_to_csv(data: Dataset) -> str:
    return write_csv([v.name for v in data.variables], data.rows.tolist())


def load_dataset(path, variables: Sequence[Variable] | None = None) -> Dataset:
    """Read a dataset CSV. Without ``variables`` each column's cardinality is
    taken as one more than its largest code (at least 2)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[int(x) for x in r] for r in reader if r], dtype=np.int64)
    rows = rows.reshape(-1, len(header))
    if variables is None:
        top = rows.max(axis=0) if len(rows) else np.zeros(len(header), dtype=np.int64)
        variables = [Variable(name, max(2, int(t) + 1)) for name, t in zip(header, top)]
    else:
        by_name = {v.name: v for v in variables}
        if sorted(by_name) != sorted(header):
            raise InvalidParameter("dataset columns do not match the model variables")
        order = [header.index(v.name) for v in variables]
        rows = rows[:, order]
    return Dataset(tuple(variables), rows)


# --- pattern JSON -----------------------------------------------------------


def pattern_to_json(p: Pattern) -> dict:
    return {
        "n": p.n,
        "directed": [[a + 1, b + 1] for a, b in sorted(p.directed)],
        "undirected": [[a + 1, b + 1] for a, b in sorted(p.undirected)],
    }


def pattern_from_json(doc: dict) -> Pattern:
    return Pattern(
        int(doc["n"]),
        frozenset((a - 1, b - 1) for a, b in doc["directed"]),
        frozenset((a - 1, b - 1) for a, b in doc["undirected"]),
    )


# --- expertise JSON ---------------------------------------------------------


def load_expertise(path) -> tuple[ExpertiseSet, dict[TestIndex, bool]]:
    """Expertise file: {"tests": [{"pair": [i, j], "cond": [...], "independent": bool?}],
    "max_cond": R?, "known_edges": [[i, j], ...]?}. Answers are optional."""
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, list):
        doc = {"tests": doc}
    tests, answers = [], {}
    for rec in doc.get("tests", []):
        t = TestIndex((rec["pair"][0] - 1, rec["pair"][1] - 1), tuple(c - 1 for c in rec.get("cond", [])))
        tests.append(t)
        if "independent" in rec:
            answers[t] = bool(rec["independent"])
    known = [(a - 1, b - 1) for a, b in doc.get("known_edges", [])]
    s = ExpertiseSet(frozenset(tests), doc.get("max_cond"), frozenset(known))
    return s, answers


def load_edges(path) -> list[tuple[int, int]]:
    """Known-edge file: [[i, j], ...] or {"edges": [[i, j], ...]}, 1-based."""
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, dict):
        doc = doc.get("edges", doc.get("known_edges", []))
    return [(int(a) - 1, int(b) - 1) for a, b in doc]
