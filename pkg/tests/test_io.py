import json

import numpy as np
import pytest

from tlmor import (
    DimensionError, ImpulseData, OptimizerConfig, era_init, impulse_response, minimize,
    random_stable_system,
)
from tlmor import io


def test_model_roundtrip(tmp_path):
    model = random_stable_system(5, 2, 3, 0.9, seed=1)
    path = tmp_path / "m.json"
    io.save_model(model, path)
    d = json.loads(path.read_text())
    assert (d["n"], d["m"], d["p"]) == (5, 2, 3)
    assert len(d["A"]) == 25 and d["B"][1] == model.B[0, 1]
    back = io.load_model(path)
    for X, Y in zip((model.A, model.B, model.C), (back.A, back.B, back.C)):
        assert np.array_equal(X, Y)


def test_model_size_mismatch(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 2, "m": 1, "p": 1, "A": [1, 2, 3], "B": [1, 1], "C": [1, 1]}))
    with pytest.raises(DimensionError):
        io.load_model(path)


def test_model_non_finite(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"n": 1, "m": 1, "p": 1, "A": [NaN], "B": [1], "C": [1]}')
    with pytest.raises(ValueError):
        io.load_model(path)


def test_impulse_roundtrip_exact(tmp_path, rng):
    data = ImpulseData(rng.standard_normal((7, 2, 3)) * 10.0 ** rng.integers(-20, 20, (7, 2, 3)))
    path = tmp_path / "h.csv"
    io.save_impulse(data, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,h_0_0,h_0_1,h_0_2,h_1_0,h_1_1,h_1_2"
    assert len(lines) == 8 and lines[3].startswith("2,")
    assert np.array_equal(io.load_impulse(path).samples, data.samples)


def test_impulse_bad_header(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("k,h_0_1,h_0_0\n0,1,2\n")
    with pytest.raises(ValueError):
        io.load_impulse(path)


def test_impulse_bad_row_order(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("k,h_0_0\n1,1.0\n0,2.0\n")
    with pytest.raises(ValueError):
        io.load_impulse(path)


def test_trace_roundtrip(tmp_path):
    data = impulse_response(random_stable_system(6, 2, 2, 0.9, seed=3), 12)
    _, trace = minimize(data, era_init(data, 2), OptimizerConfig(max_iters=15))
    path = tmp_path / "trace.csv"
    side = io.save_trace(trace, path)
    assert path.read_text().splitlines()[0] == (
        "iter,objective,rel_error,grad_norm,step,backtracks,spectral_radius,wall_ms")
    meta = json.loads(side.read_text())
    assert meta["reason"] == trace.reason and meta["iters"] == trace.n_steps
    back = io.load_trace(path)
    assert list(map(repr, back.records)) == list(map(repr, trace.records))
    assert back.reason == trace.reason
    assert back.armijo_violations() == []
