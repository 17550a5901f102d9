"""Columnar and JSON output used by the command line runner."""

import json
import math
from pathlib import Path

import numpy as np

from .backend import backend_from_params
from .errors import ShapeError
from .symbols import Symbol, XGrid

__all__ = ["to_jsonable", "write_json", "write_columns", "read_columns",
           "write_symbol", "read_symbol"]

FLOAT_FORMAT = "%.16e"


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(float(np.real(obj))), "im": to_jsonable(float(np.imag(obj)))}
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def write_columns(path, header, columns):
    """Comma-separated file with a header row; floats use 17 significant digits."""
    cols = [np.asarray(c) for c in columns]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ShapeError("columns have different lengths")
    lines = [",".join(header)]
    for i in range(n):
        cells = []
        for c in cols:
            v = c[i]
            if np.issubdtype(c.dtype, np.integer):
                cells.append(str(int(v)))
            else:
                cells.append(FLOAT_FORMAT % float(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_columns(path):
    """Read a file written by :func:`write_columns` into a dict of float arrays."""
    rows = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines()
            if ln and not ln.startswith("#")]
    header = rows[0].split(",")
    data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]]).reshape(-1, len(header))
    return {h: data[:, j] for j, h in enumerate(header)}


def write_symbol(path, sym):
    """One row per ``(x_index, point, i, j)`` with real and imaginary parts.

    Comment lines starting with ``#`` carry the backend parameters, the
    declared order, the type ``(rho, delta)`` and the x-grid.
    """
    meta = [
        "# backend: " + json.dumps(sym.backend.params, sort_keys=True),
        f"# order: {FLOAT_FORMAT % sym.order}",
        f"# type: {FLOAT_FORMAT % sym.rho},{FLOAT_FORMAT % sym.delta}",
        "# x_grid: " + ("none" if sym.invariant else f"{sym.x_grid.n_x},{sym.x_grid.n}"),
    ]
    data = sym.data if not sym.invariant else sym.data[None]
    X, P, N, _ = data.shape
    xi, p, i, j = np.meshgrid(np.arange(X), np.arange(P), np.arange(N), np.arange(N),
                              indexing="ij")
    flat = data.ravel()
    body = [",".join(["x_index", "point", "i", "j", "re", "im"])]
    for row in zip(xi.ravel(), p.ravel(), i.ravel(), j.ravel(), flat.real, flat.imag):
        body.append(f"{row[0]},{row[1]},{row[2]},{row[3]},"
                    f"{FLOAT_FORMAT % row[4]},{FLOAT_FORMAT % row[5]}")
    Path(path).write_text("\n".join(meta + body) + "\n", encoding="utf-8")


def read_symbol(path):
    """Inverse of :func:`write_symbol`."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    meta = {}
    for ln in lines:
        if ln.startswith("# "):
            key, _, val = ln[2:].partition(": ")
            meta[key] = val
    backend = backend_from_params(json.loads(meta["backend"]))
    order = float(meta["order"])
    rho, delta = (float(v) for v in meta["type"].split(","))
    x_grid = None if meta["x_grid"] == "none" else XGrid(*(int(v) for v in meta["x_grid"].split(",")))
    rows = [ln for ln in lines if ln and not ln.startswith("#")][1:]
    arr = np.array([[float(v) for v in r.split(",")] for r in rows])
    X = 1 if x_grid is None else x_grid.size
    N = backend.truncation
    data = np.zeros((X, backend.n_points, N, N), dtype=complex)
    idx = arr[:, :4].astype(int)
    data[idx[:, 0], idx[:, 1], idx[:, 2], idx[:, 3]] = arr[:, 4] + 1j * arr[:, 5]
    if x_grid is None:
        data = data[0]
    return Symbol(backend, data, order=order, rho=rho, delta=delta, x_grid=x_grid)
