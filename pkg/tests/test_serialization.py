import json
import math

import numpy as np
import pytest

from gradedpsi.backend import make_heisenberg_backend
from gradedpsi.errors import ShapeError
from gradedpsi.serialization import (read_columns, read_symbol, to_jsonable, write_columns,
                                     write_json, write_symbol)
from gradedpsi.symbols import Symbol, abelian_symbol


def test_to_jsonable():
    obj = {"a": np.float64(1.5), "b": np.arange(3), "c": 1 + 2j, "d": math.inf, "e": math.nan,
           "f": np.bool_(True), 3: (np.int64(4),)}
    out = to_jsonable(obj)
    assert out == {"a": 1.5, "b": [0, 1, 2], "c": {"re": 1.0, "im": 2.0}, "d": "inf",
                   "e": "nan", "f": True, "3": [4]}
    json.dumps(out, allow_nan=False)


def test_write_json_sorted(tmp_path):
    write_json(tmp_path / "r.json", {"z": 1, "a": [np.float32(0.5)]})
    text = (tmp_path / "r.json").read_text()
    assert text.index('"a"') < text.index('"z"')


def test_columns_roundtrip(tmp_path, rng):
    x = rng.standard_normal(7)
    write_columns(tmp_path / "t.csv", ["k", "x"], [np.arange(7), x])
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "k,x" and lines[1].startswith("0,")
    back = read_columns(tmp_path / "t.csv")
    np.testing.assert_array_equal(back["x"], x)
    np.testing.assert_array_equal(back["k"], np.arange(7))


def test_columns_length_mismatch(tmp_path):
    with pytest.raises(ShapeError):
        write_columns(tmp_path / "t.csv", ["a", "b"], [np.zeros(2), np.zeros(3)])


def test_invariant_symbol_roundtrip(tmp_path, rng):
    b = make_heisenberg_backend(0.5, 1.0, 2, 3)
    a = Symbol(b, rng.standard_normal((4, 3, 3)) + 1j * rng.standard_normal((4, 3, 3)), order=-1.5,
               rho=1.0, delta=0.0)
    write_symbol(tmp_path / "s.csv", a)
    back = read_symbol(tmp_path / "s.csv")
    np.testing.assert_array_equal(back.data, a.data)
    assert back.order == a.order and back.backend.same_grid(b) and back.invariant


def test_x_dependent_symbol_roundtrip(tmp_path, abel, xgrid):
    a = abelian_symbol(abel, lambda x, xi: np.sin(x[:, 0:1]) * xi[None, :] + 1j, 1.0, x_grid=xgrid)
    write_symbol(tmp_path / "s.csv", a)
    back = read_symbol(tmp_path / "s.csv")
    np.testing.assert_array_equal(back.data, a.data)
    assert back.x_grid.same(xgrid)
