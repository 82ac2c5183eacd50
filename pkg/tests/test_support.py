"""Tests for the error hierarchy, artifact writers and thread-pool helpers."""
import json

import numpy as np
import pandas as pd
import pytest

from semispec.artifacts import dumps, sha256_file, to_plain, write_csv, write_json
from semispec.errors import ConfigError, FlowDivergenceError, SemispecError, SpectralHitError
from semispec.parallel import map_row_chunks, parallel_map, resolve_threads


def test_errors_carry_plain_witnesses():
    err = SpectralHitError("on the spectrum", witness=1.0 + 2.0j)
    assert isinstance(err, SemispecError) and isinstance(err, RuntimeError)
    assert err.to_dict() == {
        "error": "SpectralHitError",
        "message": "on the spectrum",
        "witness": {"re": 1.0, "im": 2.0},
    }
    error = FlowDivergenceError("gone", witness=np.array([1.0, 2.0]))
    assert error.to_dict()["witness"] == [1.0, 2.0]


def test_config_error_pointer():
    err = ConfigError("grid.N", "expected an integer")
    assert err.pointer == "grid.N"
    assert str(err) == "grid.N: expected an integer"
    assert err.witness == "grid.N"


def test_to_plain_handles_numpy_and_special_values():
    data = {
        "z": np.array([1 + 1j]),
        "n": np.int64(3),
        "ok": np.bool_(True),
        "bad": float("nan"),
        "big": np.inf,
    }
    expected = {"z": [{"re": 1.0, "im": 1.0}], "n": 3, "ok": True, "bad": "nan", "big": "inf"}
    assert to_plain(data) == expected


def test_json_artifacts_are_sorted_and_byte_stable(tmp_path):
    first = write_json(tmp_path / "out" / "a.json", {"b": 1, "a": [0.5, 2j]})
    second = write_json(tmp_path / "out" / "b.json", {"a": [0.5, 2j], "b": 1})
    assert first.read_text(encoding="utf-8") == dumps({"b": 1, "a": [0.5, 2j]})
    assert list(json.loads(first.read_text(encoding="utf-8"))) == ["a", "b"]
    assert sha256_file(first) == sha256_file(second)
    assert not list((tmp_path / "out").glob(".*.tmp"))


def test_csv_artifacts_keep_full_precision(tmp_path):
    frame = pd.DataFrame({"x": [1.0 / 3.0], "y": [2.0]})
    path = write_csv(tmp_path / "f.csv", frame)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,y"
    assert float(lines[1].split(",")[0]) == 1.0 / 3.0


def test_resolve_threads(monkeypatch):
    monkeypatch.delenv("SEMISPEC_THREADS", raising=False)
    assert resolve_threads(None) == 1
    assert resolve_threads(4) == 4
    monkeypatch.setenv("SEMISPEC_THREADS", "3")
    assert resolve_threads(None) == 3
    monkeypatch.setenv("SEMISPEC_THREADS", "many")
    assert resolve_threads(None) == 1
    with pytest.raises(ValueError):
        resolve_threads(0)


def test_parallel_map_preserves_order():
    items = list(range(20))
    assert parallel_map(lambda x: x * x, items, threads=4) == [x * x for x in items]
    assert parallel_map(str, [], threads=4) == []


def test_map_row_chunks_uses_fixed_blocks():
    pts = np.arange(2 * 700, dtype=float).reshape(700, 2)
    sizes = []

    def norms(block):
        sizes.append(block.shape[0])
        return np.linalg.norm(block, axis=1)

    serial = map_row_chunks(norms, pts, threads=1)
    threaded = map_row_chunks(norms, pts, threads=4)
    np.testing.assert_array_equal(serial, threaded)
    np.testing.assert_array_equal(serial, np.linalg.norm(pts, axis=1))
    assert sorted(sizes) == sorted([256, 256, 188] * 2)

    stacked = map_row_chunks(lambda block: np.stack([block, -block]), pts, threads=3, axis=1)
    assert stacked.shape == (2, 700, 2)
    np.testing.assert_array_equal(stacked[1], -pts)
