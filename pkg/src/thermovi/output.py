"""Diagnostics CSV and legacy ASCII VTK snapshots."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .diagnostics import DiagnosticsRecord
from .errors import InvalidArgument
from .mesh import Mesh

CSV_BASE = ["t", "energy", "Lx", "Ly", "Lz", "Ax", "Ay", "Az", "entropy"]
CSV_ERRORS = ["err_phi", "err_Phi", "err_v", "err_theta"]

_CELL_TYPES = {1: 3, 2: 5, 3: 10}


def _fmt(v) -> str:
    return "" if v is None else "%.17g" % v


def record_row(rec: DiagnosticsRecord, with_errors: bool) -> list[str]:
    L = [None, None, None]
    L[: len(rec.L)] = [float(v) for v in rec.L]
    if rec.A is None:
        A = [None, None, None]
    elif np.ndim(rec.A) == 0:
        A = [None, None, float(rec.A)]
    else:
        A = [float(v) for v in rec.A]
    row = [rec.t, rec.energy, *L, *A, rec.entropy]
    if with_errors:
        row += list(rec.errors) if rec.errors is not None else [None] * 4
    return [_fmt(v) for v in row]


class CsvWriter:
    """Streaming writer, so partial output survives a failed run."""

    def __init__(self, path, with_errors: bool = False):
        self.with_errors = with_errors
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(CSV_BASE + (CSV_ERRORS if with_errors else []))

    def write(self, rec: DiagnosticsRecord):
        self._w.writerow(record_row(rec, self.with_errors))
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_csv(records, path, with_errors: bool | None = None) -> None:
    records = list(records)
    if with_errors is None:
        with_errors = any(r.errors is not None for r in records)
    with CsvWriter(path, with_errors) as w:
        for r in records:
            w.write(r)


def read_csv(path) -> dict[str, np.ndarray]:
    """Columns as float arrays; empty fields become NaN."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {
        name: np.array([float(r[j]) if r[j] else np.nan for r in body], dtype=float)
        for j, name in enumerate(header)
    }


def write_vtk(mesh: Mesh, state, path, theta=None, title: str = "thermovi snapshot") -> None:
    """Legacy ASCII unstructured grid with displacement and thermal point data."""
    n, d = mesh.n_nodes, mesh.dim
    X = mesh.coords
    pad = np.zeros((n, 3))
    pad[:, :d] = X
    disp = np.zeros((n, 3))
    disp[:, :d] = np.asarray(state.phi) - X
    if theta is None:
        theta = state.theta
    if theta is None:
        raise InvalidArgument("snapshot needs nodal temperatures")
    k = d + 1
    lines = [
        "# vtk DataFile Version 3.0",
        title.replace("\n", " ")[:255],
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {n} double",
    ]
    lines += ["%.17g %.17g %.17g" % tuple(x) for x in pad]
    lines.append(f"CELLS {mesh.n_elements} {mesh.n_elements * (k + 1)}")
    lines += [f"{k} " + " ".join(str(int(i)) for i in e) for e in mesh.elements]
    lines.append(f"CELL_TYPES {mesh.n_elements}")
    lines += [str(_CELL_TYPES[d])] * mesh.n_elements
    lines.append(f"POINT_DATA {n}")
    lines.append("VECTORS displacement double")
    lines += ["%.17g %.17g %.17g" % tuple(u) for u in disp]
    for name, values in (
        ("temperature", theta),
        ("thermal_displacement", state.Phi),
        ("entropy_momentum", state.tau),
    ):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += ["%.17g" % v for v in np.asarray(values, dtype=float)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_vtk(path) -> dict:
    """Minimal reader for the files written above (used for round-trip checks)."""
    tok = Path(path).read_text().split("\n")
    if not tok[0].startswith("# vtk DataFile Version"):
        raise InvalidArgument(f"{path}: not a legacy VTK file")
    if tok[2].strip() != "ASCII" or tok[3].strip() != "DATASET UNSTRUCTURED_GRID":
        raise InvalidArgument(f"{path}: expected ASCII unstructured grid")
    words = " ".join(tok[4:]).split()
    out: dict = {"point_data": {}}
    i = 0

    def take(m, dtype=float):
        nonlocal i
        vals = np.array(words[i : i + m], dtype=dtype)
        if len(vals) != m:
            raise InvalidArgument(f"{path}: truncated data")
        i += m
        return vals

    n = None
    while i < len(words):
        key = words[i]
        if key == "POINTS":
            n = int(words[i + 1])
            i += 3
            out["points"] = take(3 * n).reshape(n, 3)
        elif key == "CELLS":
            ncell, size = int(words[i + 1]), int(words[i + 2])
            i += 3
            flat = take(size, np.int64)
            cells, j = [], 0
            for _ in range(ncell):
                cells.append(flat[j + 1 : j + 1 + flat[j]])
                j += flat[j] + 1
            out["cells"] = np.array(cells)
        elif key == "CELL_TYPES":
            m = int(words[i + 1])
            i += 2
            out["cell_types"] = take(m, np.int64)
        elif key == "POINT_DATA":
            i += 2
        elif key == "VECTORS":
            name = words[i + 1]
            i += 3
            out["point_data"][name] = take(3 * n).reshape(n, 3)
        elif key == "SCALARS":
            name = words[i + 1]
            i += 4
            if words[i] == "LOOKUP_TABLE":
                i += 2
            out["point_data"][name] = take(n)
        else:
            raise InvalidArgument(f"{path}: unexpected token {key!r}")
    return out
