"""JSON interchange: measurement sets, states, and 17-digit report output.

Complex numbers are written as ``[re, im]`` pairs. A measurement set is::

    {"dim": d, "operators": [ [[ [re, im], ... ], ...], ... ]}
"""
from __future__ import annotations

import csv
import json
import math

import numpy as np

from .errors import StructuralError
from .povm import MeasurementSet


def _complex(x) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise StructuralError(f"complex entries must be [re, im] pairs, got {x!r}")
        re, im = x
    else:
        re, im = x, 0.0
    if isinstance(re, bool) or isinstance(im, bool):
        raise StructuralError("booleans are not numbers")
    try:
        return complex(float(re), float(im))
    except (TypeError, ValueError) as exc:
        raise StructuralError(f"bad numeric entry {x!r}") from exc


def _is_scalar_entry(x) -> bool:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return True
    return isinstance(x, (list, tuple)) and len(x) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
    )


def decode_matrix(rows) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise StructuralError("a matrix must be a non-empty list of rows")
    width = len(rows[0])
    if width == 0 or any(len(r) != width for r in rows):
        raise StructuralError("matrix rows are not rectangular")
    return np.array([[_complex(x) for x in r] for r in rows], dtype=complex)


def encode_matrix(A) -> list:
    A = np.asarray(A, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in A]


def measurement_set_from_dict(data) -> MeasurementSet:
    if not isinstance(data, dict) or "operators" not in data:
        raise StructuralError('measurement-set JSON needs an "operators" field')
    ops = data["operators"]
    if not isinstance(ops, list) or not ops:
        raise StructuralError('"operators" must be a non-empty list')
    mats = [decode_matrix(M) for M in ops]
    mset = MeasurementSet(mats)
    dim = data.get("dim", mset.d)
    if dim != mset.d:
        raise StructuralError(f'"dim" is {dim} but operators are {mset.d}x{mset.d}')
    return mset


def measurement_set_to_dict(mset: MeasurementSet, meta: dict | None = None) -> dict:
    out = {"dim": mset.d, "operators": [encode_matrix(M) for M in mset.operators]}
    if meta:
        out["meta"] = meta
    return out


def loads_measurement_set(text: str) -> MeasurementSet:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructuralError(f"invalid JSON: {exc}") from exc
    return measurement_set_from_dict(data)


def load_measurement_set(path) -> MeasurementSet:
    with open(path) as fh:
        return loads_measurement_set(fh.read())


def state_from_json(data, d: int | None = None) -> np.ndarray:
    """A ket or a density matrix.

    ``{"ket": [...]}`` and ``{"density_matrix": [[...]]}`` are explicit. A bare
    list is a matrix when it has d rows of d entries each, otherwise a ket.
    That keeps ``[[re, im], [re, im]]`` ambiguous for d = 2, where it reads as
    a matrix; tag complex qubit kets with ``"ket"``.
    """
    if isinstance(data, dict):
        if "ket" in data:
            return _decode_ket(data["ket"])
        if "density_matrix" in data:
            return decode_matrix(data["density_matrix"])
        if "state" in data:
            data = data["state"]
    if not isinstance(data, list) or not data:
        raise StructuralError("a state must be a non-empty list")
    is_matrix = all(isinstance(row, list) for row in data) and (
        not all(_is_scalar_entry(x) for x in data)
        or (d is not None and len(data) == d and all(len(row) == d for row in data))
    )
    if is_matrix:
        return decode_matrix(data)
    return _decode_ket(data)


def _decode_ket(data) -> np.ndarray:
    if not isinstance(data, list) or not data or not all(_is_scalar_entry(x) for x in data):
        raise StructuralError("a ket must be a non-empty list of numbers or [re, im] pairs")
    return np.array([_complex(x) for x in data], dtype=complex)


def _format(obj) -> str:
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return format(x, ".17g")
    if isinstance(obj, (complex, np.complexfloating)):
        return _format([obj.real, obj.imag])
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_format(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, np.ndarray):
        return _format(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_format(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON text with every float printed to 17 significant digits."""
    return _format(obj)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format(float(v), ".17g") if isinstance(v, (float, np.floating)) else v for v in row])
