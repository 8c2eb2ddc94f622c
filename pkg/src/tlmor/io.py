"""File formats: model JSON, impulse CSV, trace CSV with JSON sidecar."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .exceptions import DimensionError
from .lti import ImpulseData, ReducedModel, StateSpaceModel
from .optimizer import ConvergenceTrace, IterationRecord

TRACE_FIELDS = ("iter", "objective", "rel_error", "grad_norm", "step",
                "backtracks", "spectral_radius", "wall_ms")


def fmt(x: float) -> str:
    """Shortest decimal string that round-trips to the same double."""
    return repr(float(x))


def model_to_dict(model: StateSpaceModel | ReducedModel) -> dict:
    n = model.A.shape[0]
    return {
        "n": n, "m": model.m, "p": model.p,
        "A": model.A.ravel().tolist(),
        "B": model.B.ravel().tolist(),
        "C": model.C.ravel().tolist(),
    }


def _matrices_from_dict(d: dict):
    try:
        n, m, p = int(d["n"]), int(d["m"]), int(d["p"])
        A = np.asarray(d["A"], dtype=float)
        B = np.asarray(d["B"], dtype=float)
        C = np.asarray(d["C"], dtype=float)
    except KeyError as exc:
        raise ValueError(f"model file lacks field {exc}") from exc
    if A.size != n * n or B.size != n * m or C.size != p * n:
        raise DimensionError(
            f"flat arrays of sizes {A.size}, {B.size}, {C.size} do not match n={n}, m={m}, p={p}"
        )
    return A.reshape(n, n), B.reshape(n, m), C.reshape(p, n)


def save_model(model: StateSpaceModel | ReducedModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)) + "\n")


def load_model(path) -> StateSpaceModel:
    return StateSpaceModel(*_matrices_from_dict(json.loads(Path(path).read_text())))


def load_rom(path) -> ReducedModel:
    return ReducedModel(*_matrices_from_dict(json.loads(Path(path).read_text())))


def impulse_header(p: int, m: int) -> list[str]:
    return ["k"] + [f"h_{i}_{j}" for i in range(p) for j in range(m)]


def save_impulse(data: ImpulseData, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(impulse_header(data.p, data.m))
        for k in range(data.L):
            w.writerow([k] + [fmt(x) for x in data.samples[k].ravel()])


def load_impulse(path) -> ImpulseData:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty impulse file")
    header, body = rows[0], rows[1:]
    if header[0] != "k" or len(header) < 2:
        raise ValueError(f"{path}: bad header {header[:3]}")
    idx = []
    for name in header[1:]:
        parts = name.split("_")
        if len(parts) != 3 or parts[0] != "h":
            raise ValueError(f"{path}: bad column name {name!r}")
        idx.append((int(parts[1]), int(parts[2])))
    p = max(i for i, _ in idx) + 1
    m = max(j for _, j in idx) + 1
    if header != impulse_header(p, m):
        raise ValueError(f"{path}: columns are not row-major over (output, input)")
    samples = np.empty((len(body), p, m))
    for k, row in enumerate(body):
        if int(row[0]) != k:
            raise ValueError(f"{path}: row {k} has k={row[0]}")
        if len(row) != len(header):
            raise ValueError(f"{path}: row {k} has {len(row)} fields")
        samples[k] = np.array([float(x) for x in row[1:]]).reshape(p, m)
    return ImpulseData(samples)


def save_trace(trace: ConvergenceTrace, path) -> Path:
    """Write the trace CSV and its sidecar; returns the sidecar path."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_FIELDS)
        for r in trace.records:
            w.writerow([r.iter, fmt(r.objective), fmt(r.rel_error), fmt(r.grad_norm),
                        fmt(r.step), r.backtracks, fmt(r.spectral_radius), fmt(r.wall_ms)])
    side = sidecar_path(path)
    side.write_text(json.dumps({"reason": trace.reason, "iters": trace.n_steps,
                                "c1": trace.c1}) + "\n")
    return side


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def load_trace(path) -> ConvergenceTrace:
    path = Path(path)
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != TRACE_FIELDS:
            raise ValueError(f"{path}: unexpected trace header {rd.fieldnames}")
        records = [
            IterationRecord(
                iter=int(row["iter"]), objective=float(row["objective"]),
                rel_error=float(row["rel_error"]), grad_norm=float(row["grad_norm"]),
                step=float(row["step"]), backtracks=int(row["backtracks"]),
                spectral_radius=float(row["spectral_radius"]), wall_ms=float(row["wall_ms"]),
            )
            for row in rd
        ]
    meta = json.loads(sidecar_path(path).read_text())
    trace = ConvergenceTrace(records=records, reason=meta["reason"], c1=meta.get("c1", 1e-4))
    if trace.n_steps != meta["iters"]:
        raise ValueError(f"{path}: sidecar says {meta['iters']} steps, CSV has {trace.n_steps}")
    return trace


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=True) + "\n")
