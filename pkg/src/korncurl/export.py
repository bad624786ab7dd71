"""File output: legacy VTK for meshes and fields, JSON Lines and CSV records."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .fespace import FieldDofs, LagrangeSpace, cell_curls, eval_field
from .mesh import FACE_REGIONS, Mesh
from .tensor3 import sym

VTK_TETRA = 10
VTK_TRIANGLE = 5
CSV_COLUMNS = ("k", "p", "region", "lambda_min", "constant", "seconds")


def _header(out, title, mesh):
    out.append("# vtk DataFile Version 3.0")
    out.append(title)
    out.append("ASCII")
    out.append("DATASET UNSTRUCTURED_GRID")
    out.append(f"POINTS {mesh.n_vertices} double")
    out.extend(" ".join(f"{v:.17g}" for v in row) for row in mesh.vertices)


def _cells(out, blocks):
    n = sum(len(b) for b, _ in blocks)
    size = sum(len(b) * (b.shape[1] + 1) for b, _ in blocks)
    out.append(f"CELLS {n} {size}")
    for b, _ in blocks:
        out.extend(f"{b.shape[1]} " + " ".join(map(str, row)) for row in b)
    out.append(f"CELL_TYPES {n}")
    for b, kind in blocks:
        out.extend([str(kind)] * len(b))


def _tensors(out, name, T):
    out.append(f"TENSORS {name} double")
    for A in T:
        out.extend(" ".join(f"{v:.17g}" for v in row) for row in A)


def write_mesh_vtk(path, mesh: Mesh):
    """Tetrahedra plus boundary triangles; cell data ``region_id`` is -1 on
    tetrahedra and the index into ``FACE_REGIONS`` on boundary faces."""
    out = []
    _header(out, f"{mesh.name} regions: " + " ".join(r.value for r in FACE_REGIONS), mesh)
    _cells(out, [(mesh.cells, VTK_TETRA), (mesh.boundary_faces, VTK_TRIANGLE)])
    ids = np.concatenate([-np.ones(mesh.n_cells, dtype=int), mesh.boundary_labels])
    out.append(f"CELL_DATA {len(ids)}")
    out.append("SCALARS region_id int 1")
    out.append("LOOKUP_TABLE default")
    out.extend(map(str, ids))
    Path(path).write_text("\n".join(out) + "\n")


def write_fields_vtk(path, mesh: Mesh, P: FieldDofs | None = None, u: FieldDofs | None = None):
    """Tetrahedra with ``P``, ``CurlP`` and ``symP`` as cell tensors (``P``
    evaluated at the barycenter) and ``u`` as point vectors."""
    out = []
    _header(out, f"{mesh.name} fields", mesh)
    _cells(out, [(mesh.cells, VTK_TETRA)])
    if P is not None:
        centre = np.full(4, 0.25)
        Pc = np.array([eval_field(P, c, centre) for c in range(mesh.n_cells)])
        out.append(f"CELL_DATA {mesh.n_cells}")
        _tensors(out, "P", Pc)
        _tensors(out, "CurlP", cell_curls(P))
        _tensors(out, "symP", sym(Pc))
    if u is not None:
        if not isinstance(u.space, LagrangeSpace):
            raise TypeError("u must be a P1 vector field")
        vec = u.values.reshape(u.space.ncomp, mesh.n_vertices).T
        out.append(f"POINT_DATA {mesh.n_vertices}")
        out.append("VECTORS u double")
        out.extend(" ".join(f"{v:.17g}" for v in row) for row in vec)
    Path(path).write_text("\n".join(out) + "\n")


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


def append_jsonl(path, records):
    with open(path, "a") as fh:
        for rec in records:
            fh.write(json.dumps(_plain(rec), sort_keys=False, allow_nan=True) + "\n")


def read_jsonl(path) -> list:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_csv(path, records):
    """Summary table with the fixed columns ``CSV_COLUMNS``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for rec in records:
            w.writerow(["" if rec.get(c) is None else rec.get(c) for c in CSV_COLUMNS])


def all_finite(rec) -> bool:
    """True when every float in the (nested) record is finite."""
    if isinstance(rec, dict):
        return all(all_finite(v) for v in rec.values())
    if isinstance(rec, (list, tuple)):
        return all(all_finite(v) for v in rec)
    if isinstance(rec, float):
        return math.isfinite(rec)
    return True
