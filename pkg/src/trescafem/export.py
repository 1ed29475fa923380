"""Deterministic file writers: legacy VTK, CSV traces and JSON summaries."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .mesh import BoundaryTopology, TriMesh


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_vtk(path: str | Path, mesh: TriMesh, vectors: dict[str, np.ndarray], title: str = "trescafem") -> None:
    """Unstructured-grid legacy ASCII file with nodal 2D vectors (z = 0)."""
    nv, nt = mesh.n_vertices, len(mesh.triangles)
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID", f"POINTS {nv} double"]
    lines += [f"{_num(x)} {_num(y)} 0.0" for x, y in mesh.vertices]
    lines.append(f"CELLS {nt} {4 * nt}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {nt}")
    lines += ["5"] * nt
    lines.append(f"POINT_DATA {nv}")
    for name, u in vectors.items():
        u = np.asarray(u, dtype=float).reshape(-1, 2)
        lines.append(f"VECTORS {name} double")
        lines += [f"{_num(a)} {_num(b)} 0.0" for a, b in u]
    Path(path).write_text("\n".join(lines) + "\n")


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) for v in row])


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def write_json(path: str | Path, data: dict) -> None:
    Path(path).write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


def boundary_theta(topology: BoundaryTopology) -> np.ndarray:
    p = topology.neumann_points
    return np.mod(np.arctan2(p[:, 1], p[:, 0]), 2 * np.pi)


def write_boundary_csv(path: str | Path, topology: BoundaryTopology, columns: dict[str, np.ndarray]) -> None:
    """One row per Neumann node, sorted by polar angle, first column ``theta``."""
    theta = boundary_theta(topology)
    order = np.argsort(theta, kind="stable")
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    rows = ([theta[i]] + [c[i] for c in cols] for i in order)
    write_csv(path, ["theta", *names], rows)
