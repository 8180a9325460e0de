"""CSV and JSON file formats.

All numbers are written with 17 significant digits so that files round-trip
bit-exactly.  CSV readers accept only a period as the decimal separator.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidConfig
from .measure_core import MeasureSequence, SubCellMeasures, generator_from_spec
from .shift_ops import LpVector, WeightSequence


def fmt(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(float(x), ".17g")


def _read_rows(path, header: tuple) -> list[list[str]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise InvalidConfig(f"{path}: empty file") from None
        if tuple(c.strip() for c in first) != header:
            raise InvalidConfig(f"{path}: expected header {','.join(header)}, got {','.join(first)}")
        return [row for row in reader if row]


def _write_rows(path, header: tuple, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _number(s: str, path) -> float:
    try:
        return float(s)
    except ValueError:
        raise InvalidConfig(f"{path}: cannot parse number {s!r}") from None


def read_measure_csv(path, generator=None) -> MeasureSequence:
    rows = _read_rows(path, ("k", "nu"))
    ks = [int(r[0]) for r in rows]
    if ks != sorted(ks):
        raise InvalidConfig(f"{path}: rows must be sorted by k")
    return MeasureSequence.from_mapping({k: _number(r[1], path) for k, r in zip(ks, rows)},
                                        generator)


def write_measure_csv(path, nu: MeasureSequence) -> None:
    _write_rows(path, ("k", "nu"), ((int(k), fmt(v)) for k, v in zip(nu.ks, nu.nu)))


def read_weights_csv(path) -> WeightSequence:
    rows = _read_rows(path, ("k", "w"))
    ks = [int(r[0]) for r in rows]
    if ks != list(range(ks[0], ks[0] + len(ks))):
        raise InvalidConfig(f"{path}: weights must cover a contiguous sorted range")
    return WeightSequence.from_values([_number(r[1], path) for r in rows], ks[0])


def write_weights_csv(path, w: WeightSequence) -> None:
    _write_rows(path, ("k", "w"), ((int(k), fmt(v)) for k, v in zip(w.indices, w.values)))


def read_vector_csv(path, p: float = 2.0) -> LpVector:
    rows = _read_rows(path, ("n", "x"))
    return LpVector.from_mapping({int(r[0]): _number(r[1], path) for r in rows}, p)


def write_vector_csv(path, x: LpVector) -> None:
    _write_rows(path, ("n", "x"), ((int(n), fmt(v)) for n, v in zip(x.indices, x.entries)))


def read_density_csv(path) -> tuple[np.ndarray, np.ndarray]:
    rows = _read_rows(path, ("x", "h"))
    x = np.array([_number(r[0], path) for r in rows])
    h = np.array([_number(r[1], path) for r in rows])
    return x, h


def write_pseudo_archive(path, points: dict, delta: float, p: float) -> Path:
    """Write ``n,coord,value`` rows plus a JSON sidecar; returns the sidecar path."""
    path = Path(path)
    rows = []
    for n in sorted(points):
        x = points[n]
        rows.extend((n, int(c), fmt(v)) for c, v in zip(x.indices, x.entries))
    _write_rows(path, ("n", "coord", "value"), rows)
    side = path.with_suffix(path.suffix + ".json")
    lo, hi = min(points), max(points)
    side.write_text(dumps({"delta": delta, "p": p, "window": [lo, hi]}) + "\n")
    return side


def read_pseudo_archive(path) -> tuple[dict, float, float]:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    lo, hi = meta["window"]
    p = float(meta["p"])
    acc = {n: {} for n in range(lo, hi + 1)}
    for n, c, v in _read_rows(path, ("n", "coord", "value")):
        acc[int(n)][int(c)] = _number(v, path)
    points = {n: LpVector.from_mapping(m, p) for n, m in acc.items()}
    return points, float(meta["delta"]), p


def read_partition(spec, nu: MeasureSequence | None = None):
    """Sub-cell data from a partition spec (dict or JSON path).

    Accepted forms:
      {"density": {...}, "cuts": [0, 0.5, 1], "window": 32}
      {"proportional": [0.25, 0.75], "cells": ["B1", "B2"]}   (needs ``nu``)
      {"cells": [...], "base": [...], "measures": [[k, m_1, ..., m_r], ...]}
    Returns (SubCellMeasures, MeasureSequence or None).
    """
    if not isinstance(spec, dict):
        spec = json.loads(Path(spec).read_text())
    if "density" in spec:
        from .density_rn import density_from_spec, measures_from_density, subcells_from_density
        model = density_from_spec(spec["density"])
        N = int(spec.get("window", 32))
        sub = subcells_from_density(model, spec.get("cuts", [0.0, 0.5, 1.0]), N)
        return sub, measures_from_density(model, (-N, N))
    if "proportional" in spec:
        if nu is None:
            raise InvalidConfig("a proportional partition needs a measure sequence")
        return SubCellMeasures.proportional(nu, spec["proportional"], spec.get("cells")), nu
    if "measures" in spec:
        rows = sorted(spec["measures"], key=lambda r: r[0])
        table = np.array([r[1:] for r in rows], dtype=float).T
        sub = SubCellMeasures.from_table(spec["cells"], spec["base"], table)
        if nu is None:
            nu = MeasureSequence.from_values(table.sum(axis=0))
        return sub, nu
    raise InvalidConfig("partition spec needs one of: density, proportional, measures")


def read_simple_function(spec, sub, nu, p: float = 2.0):
    from .factor_map import SimpleFunction
    if not isinstance(spec, dict):
        spec = json.loads(Path(spec).read_text())
    items = [(int(r["k"]), r["cell"], float(r["a"])) for r in spec["pieces"]]
    return SimpleFunction.from_pieces(items, sub, nu, p)


def generator_from_json(text: str | None):
    return generator_from_spec(json.loads(text)) if text else None


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return json.dumps(fmt(x)) if not math.isfinite(x) else fmt(x)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in seq) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return json.dumps(str(obj))


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON with 17-significant-digit floats; non-finite floats as strings."""
    return _encode(obj, indent, 0)
