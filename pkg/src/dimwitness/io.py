"""Canonical JSON and CSV formats (documented in docs/formats.md)."""
from __future__ import annotations

import csv
import hashlib
import io as _io
import json
from pathlib import Path

import numpy as np

from .core import Effect, Field, Preparation, ProbabilityMatrix, Scenario, StateVector
from .errors import StructuralError

SCENARIO_FORMAT = "dimwitness.scenario"
RESULT_FORMAT = "dimwitness.result"
FORMAT_VERSION = 1


def canonical_dumps(doc) -> str:
    """Sorted keys, two-space indent, shortest round-trip floats, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, doc) -> None:
    Path(path).write_text(canonical_dumps(doc))


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise StructuralError(f"{path}: malformed JSON ({exc})") from None


def _num(x) -> float:
    # normalize -0.0 so equal scenarios serialize identically
    x = float(x)
    return 0.0 if x == 0 else x


def _ket_to_json(v) -> list:
    return [[_num(z.real), _num(z.imag)] for z in np.asarray(v, dtype=complex)]


def _ket_from_json(rows) -> np.ndarray:
    try:
        a = np.array(rows, dtype=float)
    except (TypeError, ValueError):
        raise StructuralError("amplitudes must be [re, im] pairs") from None
    if a.ndim != 2 or a.shape[1] != 2:
        raise StructuralError("amplitudes must be [re, im] pairs")
    return a[:, 0] + 1j * a[:, 1]


def _matrix_to_json(m) -> list:
    return [_ket_to_json(row) for row in np.asarray(m)]


def _matrix_from_json(rows) -> np.ndarray:
    if not isinstance(rows, list):
        raise StructuralError("matrix must be a list of rows")
    return np.array([_ket_from_json(r) for r in rows])


def scenario_to_dict(s: Scenario) -> dict:
    """Pure preparations are kets; mixed ones and raw effects carry a ``matrix``."""
    preps = []
    for p in s.preparations:
        preps.append(_ket_to_json(p.vector.amplitudes) if p.vector is not None
                     else {"matrix": _matrix_to_json(p.matrix)})
    effects = []
    for e in s.effects:
        if e.columns is None:
            effects.append({"matrix": _matrix_to_json(e.matrix)})
        else:
            effects.append({"columns": [_ket_to_json(c.amplitudes) for c in e.columns]})
    return {"format": SCENARIO_FORMAT, "version": FORMAT_VERSION, "dim": s.dim,
            "field": s.field.value, "preparations": preps, "effects": effects}


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise StructuralError("scenario document must be a JSON object")
    if doc.get("format", SCENARIO_FORMAT) != SCENARIO_FORMAT:
        raise StructuralError(f"not a scenario document: format {doc.get('format')!r}")
    if int(doc.get("version", FORMAT_VERSION)) != FORMAT_VERSION:
        raise StructuralError(f"unsupported scenario version {doc.get('version')!r}")
    for key in ("dim", "field", "preparations", "effects"):
        if key not in doc:
            raise StructuralError(f"scenario document lacks {key!r}")
    field = Field.parse(doc["field"])
    preps = []
    for p in doc["preparations"]:
        if isinstance(p, dict):
            preps.append(Preparation(_matrix_from_json(p["matrix"])))
        else:
            preps.append(Preparation.pure(StateVector(_ket_from_json(p), field)))
    effects = []
    for e in doc["effects"]:
        if not isinstance(e, dict):
            raise StructuralError("each effect must be an object with 'columns' or 'matrix'")
        if "columns" in e:
            effects.append(Effect([StateVector(_ket_from_json(c), field) for c in e["columns"]],
                                  dim=int(doc["dim"])))
        elif "matrix" in e:
            effects.append(Effect.from_matrix(_matrix_from_json(e["matrix"])))
        else:
            raise StructuralError("each effect must have 'columns' or 'matrix'")
    s = Scenario(preps, effects, field=field)
    if s.dim != int(doc["dim"]):
        raise StructuralError(f"declared dim {doc['dim']} but vectors have dimension {s.dim}")
    return s


def dumps_scenario(s: Scenario) -> str:
    return canonical_dumps(scenario_to_dict(s))


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(s))


def load_scenario(path) -> Scenario:
    return scenario_from_dict(read_json(path))


def scenario_digest(s: Scenario) -> str:
    return "sha256:" + hashlib.sha256(dumps_scenario(s).encode()).hexdigest()


# probability matrices and counts

def probability_matrix_to_csv(pm) -> str:
    """Header ``row,p1,...,p{k+1}``; rows 1..k are measurements, the last is the always-yes row."""
    p = np.asarray(pm, dtype=float)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row"] + [f"p{j + 1}" for j in range(p.shape[1])])
    for i, row in enumerate(p):
        w.writerow([i + 1] + [repr(_num(v)) for v in row])
    return buf.getvalue()


def probability_matrix_from_csv(text: str) -> ProbabilityMatrix:
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or rows[0][0] != "row":
        raise StructuralError("probability CSV needs a header starting with 'row'")
    try:
        return ProbabilityMatrix([[float(v) for v in r[1:]] for r in rows[1:] if r])
    except ValueError as exc:
        raise StructuralError(f"probability CSV: {exc}") from None


def counts_to_csv(counts, N: int) -> str:
    """One line per cell: ``i,j,N_ij,N`` with 1-based indices."""
    c = np.asarray(counts)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "N_ij", "N"])
    for i in range(c.shape[0]):
        for j in range(c.shape[1]):
            w.writerow([i + 1, j + 1, int(c[i, j]), int(N)])
    return buf.getvalue()


def counts_from_csv(text: str):
    """Return ``(counts, N)``; every cell of the k x (k+1) table must appear once with the same N."""
    reader = csv.DictReader(_io.StringIO(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["i", "j", "N_ij", "N"]:
        raise StructuralError("counts CSV header must be i,j,N_ij,N")
    cells = {}
    shots = set()
    try:
        for r in reader:
            key = (int(r["i"]), int(r["j"]))
            if key in cells:
                raise StructuralError(f"duplicate cell {key}")
            cells[key] = int(r["N_ij"])
            shots.add(int(r["N"]))
    except (TypeError, ValueError):
        raise StructuralError("counts CSV entries must be integers") from None
    if not cells:
        raise StructuralError("counts CSV is empty")
    if len(shots) != 1:
        raise StructuralError("all cells must share the same N")
    k = max(i for i, _ in cells)
    if set(cells) != {(i, j) for i in range(1, k + 1) for j in range(1, k + 2)}:
        raise StructuralError(f"counts CSV must cover every cell of a {k} x {k + 1} table")
    counts = np.zeros((k, k + 1), dtype=np.int64)
    for (i, j), v in cells.items():
        counts[i - 1, j - 1] = v
    return counts, shots.pop()


def trace_to_csv(trace) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["stage", "best"])
    for s, v in enumerate(trace):
        w.writerow([s, repr(float(v))])
    return buf.getvalue()


def load_result(path) -> dict:
    doc = read_json(path)
    if not isinstance(doc, dict) or doc.get("format") != RESULT_FORMAT:
        raise StructuralError(f"{path}: not a result file")
    if doc.get("version") != FORMAT_VERSION:
        raise StructuralError(f"{path}: unsupported result version {doc.get('version')!r}")
    for key in ("command", "config", "result"):
        if key not in doc:
            raise StructuralError(f"{path}: result file lacks {key!r}")
    return doc


__all__ = [
    "canonical_dumps", "write_json", "read_json", "scenario_to_dict", "scenario_from_dict",
    "dumps_scenario", "save_scenario", "load_scenario", "scenario_digest",
    "probability_matrix_to_csv", "probability_matrix_from_csv", "counts_to_csv",
    "counts_from_csv", "trace_to_csv", "load_result", "RESULT_FORMAT", "FORMAT_VERSION",
]
