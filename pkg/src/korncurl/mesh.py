"""Structured tetrahedral meshes of boxes and an L-shaped prism.

Every subcube is split into the six Kuhn tetrahedra that share its main
diagonal. Because the diagonal direction is the same in every subcube the
resulting mesh is face-conforming, and halving the mesh size refines the
coarser mesh (the meshes are nested).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import EmptyRegion, UnknownRegion


class Region(str, Enum):
    WHOLE = "whole-boundary"
    X0 = "face-x0"
    X1 = "face-x1"
    Y0 = "face-y0"
    Y1 = "face-y1"
    Z0 = "face-z0"
    Z1 = "face-z1"

    @classmethod
    def parse(cls, name) -> "Region":
        if isinstance(name, Region):
            return name
        aliases = {"all": cls.WHOLE, "whole": cls.WHOLE}
        key = str(name).strip().lower()
        if key in aliases:
            return aliases[key]
        for r in cls:
            if key in (r.value, r.value.removeprefix("face-")):
                return r
        raise UnknownRegion(f"unknown boundary region {name!r}")


FACE_REGIONS = (Region.X0, Region.X1, Region.Y0, Region.Y1, Region.Z0, Region.Z1)

# Local edges and faces of a tetrahedron (local vertex indices).
LOCAL_EDGES = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
LOCAL_FACES = np.array([(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)])  # face i is opposite vertex i


@dataclass(frozen=True, eq=False)
class Mesh:
    """Tetrahedral complex with full incidence.

    Attributes
    ----------
    vertices : (V, 3) float
    cells : (C, 4) int, positively oriented
    edges : (E, 2) int, ascending vertex indices
    cell_to_edges : (C, 6) int, global edge of each local edge in ``LOCAL_EDGES``
    cell_edge_signs : (C, 6) +/-1, +1 when the local direction (low local
        vertex to high local vertex) matches the global one
    faces : (F, 3) int, sorted vertex triples (all faces)
    boundary_faces : (B, 3) int, oriented so the normal points outward
    boundary_normals : (B, 3) unit outward normals
    boundary_labels : (B,) index into ``FACE_REGIONS``
    boundary_cells : (B,) the unique cell adjacent to each boundary face
    """

    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray
    cell_to_edges: np.ndarray
    cell_edge_signs: np.ndarray
    faces: np.ndarray
    face_cells: np.ndarray
    boundary_faces: np.ndarray
    boundary_normals: np.ndarray
    boundary_labels: np.ndarray
    boundary_cells: np.ndarray
    name: str = "mesh"
    level: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def cell_volumes(self) -> np.ndarray:
        x = self.vertices[self.cells]
        d = x[:, 1:] - x[:, :1]
        return np.linalg.det(d) / 6.0

    def volume(self) -> float:
        return float(self.cell_volumes().sum())

    def boundary_face_areas(self) -> np.ndarray:
        x = self.vertices[self.boundary_faces]
        return 0.5 * np.linalg.norm(np.cross(x[:, 1] - x[:, 0], x[:, 2] - x[:, 0]), axis=1)

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces - self.n_cells

    def region_face_mask(self, region) -> np.ndarray:
        region = Region.parse(region)
        if region is Region.WHOLE:
            mask = np.ones(len(self.boundary_faces), dtype=bool)
        else:
            mask = self.boundary_labels == FACE_REGIONS.index(region)
        if not mask.any():
            raise EmptyRegion(f"region {region.value!r} has no faces on {self.name}")
        return mask

    def boundary_vertices(self, region) -> np.ndarray:
        mask = self.region_face_mask(region)
        return np.unique(self.boundary_faces[mask])

    def edge_index(self) -> dict:
        if "edge_index" not in self._cache:
            self._cache["edge_index"] = {tuple(e): i for i, e in enumerate(self.edges.tolist())}
        return self._cache["edge_index"]

    def edge_cells(self) -> np.ndarray:
        """One cell containing each edge, plus the local edge number there."""
        if "edge_cells" not in self._cache:
            owner = np.empty((self.n_edges, 2), dtype=np.int64)
            owner[self.cell_to_edges.ravel(), 0] = np.repeat(np.arange(self.n_cells), 6)
            owner[self.cell_to_edges.ravel(), 1] = np.tile(np.arange(6), self.n_cells)
            self._cache["edge_cells"] = owner
        return self._cache["edge_cells"]

    def barycenters(self) -> np.ndarray:
        return self.vertices[self.cells].mean(axis=1)


def boundary_edges(mesh: Mesh, region) -> np.ndarray:
    """Sorted indices of edges lying on boundary faces labeled ``region``."""
    mask = mesh.region_face_mask(region)
    tri = np.sort(mesh.boundary_faces[mask], axis=1)
    pairs = np.concatenate([tri[:, [0, 1]], tri[:, [0, 2]], tri[:, [1, 2]]])
    idx = mesh.edge_index()
    return np.unique([idx[tuple(p)] for p in pairs.tolist()])


def _kuhn_tets(origin_index, strides):
    """Six tetrahedra of the subcube whose low corner has flat index
    ``origin_index``; ``strides`` are the flat-index steps along x, y, z."""
    tets = []
    for perm in itertools.permutations(range(3)):
        a = origin_index
        b = a + strides[perm[0]]
        c = b + strides[perm[1]]
        d = c + strides[perm[2]]
        tets.append((a, b, c, d))
    return tets


def _from_cells(vertices, cells, name, level=0) -> Mesh:
    vertices = np.asarray(vertices, dtype=float)
    cells = np.asarray(cells, dtype=np.int64)

    # positive orientation
    x = vertices[cells]
    vol = np.linalg.det(x[:, 1:] - x[:, :1])
    flip = vol < 0
    cells[flip, 2], cells[flip, 3] = cells[flip, 3].copy(), cells[flip, 2].copy()

    # edges
    local = cells[:, LOCAL_EDGES]                      # (C, 6, 2)
    signs = np.where(local[:, :, 0] < local[:, :, 1], 1, -1)
    all_edges = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse = np.unique(all_edges, axis=0, return_inverse=True)
    cell_to_edges = inverse.reshape(len(cells), 6)

    # faces
    local_f = cells[:, LOCAL_FACES]                    # (C, 4, 3)
    all_faces = np.sort(local_f.reshape(-1, 3), axis=1)
    faces, finv, fcount = np.unique(all_faces, axis=0, return_inverse=True, return_counts=True)
    finv = finv.ravel()
    face_cells = -np.ones((len(faces), 2), dtype=np.int64)
    owner = np.repeat(np.arange(len(cells)), 4)
    order = np.argsort(finv, kind="stable")
    starts = np.searchsorted(finv[order], np.arange(len(faces)))
    face_cells[:, 0] = owner[order[starts]]
    second = order[np.minimum(starts + 1, len(order) - 1)]
    has2 = fcount == 2
    face_cells[has2, 1] = owner[second[has2]]

    bmask = fcount == 1
    bnd_slots = np.flatnonzero(bmask[finv])            # slots (cell*4 + local face)
    bcell = bnd_slots // 4
    blocal = bnd_slots % 4
    btri = local_f.reshape(-1, 3)[bnd_slots]
    opposite = cells[bcell, blocal]
    p = vertices[btri]
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    inward = np.einsum("ij,ij->i", n, vertices[opposite] - p[:, 0]) > 0
    n[inward] *= -1
    btri[inward] = btri[inward][:, [0, 2, 1]]
    n /= np.linalg.norm(n, axis=1, keepdims=True)

    # label by dominant outward normal direction: +x -> face-x1 etc.
    axis = np.argmax(np.abs(n), axis=1)
    positive = n[np.arange(len(n)), axis] > 0
    labels = 2 * axis + positive.astype(np.int64)

    return Mesh(vertices=vertices, cells=cells, edges=edges,
                cell_to_edges=cell_to_edges, cell_edge_signs=signs,
                faces=faces, face_cells=face_cells,
                boundary_faces=btri, boundary_normals=n,
                boundary_labels=labels, boundary_cells=bcell, name=name, level=level)


def _grid(shape, spacing, keep=None):
    nx, ny, nz = shape
    strides = (1, nx + 1, (nx + 1) * (ny + 1))
    g = np.stack(np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), np.arange(nz + 1),
                             indexing="ij"), axis=-1)
    pts = g.transpose(2, 1, 0, 3).reshape(-1, 3) * np.asarray(spacing)
    cells = []
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                if keep is not None and not keep(i, j, k):
                    continue
                cells.extend(_kuhn_tets(i + strides[1] * j + strides[2] * k, strides))
    cells = np.array(cells, dtype=np.int64)
    used = np.unique(cells)
    remap = -np.ones(len(pts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return pts[used], remap[cells]


def build_box_mesh(extent=(1.0, 1.0, 1.0), subdivisions: int = 1) -> Mesh:
    """Box ``[0, extent]`` with ``subdivisions**3`` subcubes, 6 tets each."""
    k = int(subdivisions)
    if k < 1:
        raise ValueError("subdivisions must be >= 1")
    extent = np.asarray(extent, dtype=float)
    if extent.shape != (3,) or np.any(extent <= 0):
        raise ValueError("extent must be three positive lengths")
    pts, cells = _grid((k, k, k), extent / k)
    return _from_cells(pts, cells, name=f"box-k{k}", level=k)


def build_lshape_mesh(subdivisions: int = 1) -> Mesh:
    """``[0,1]^3`` minus ``[1/2,1] x [1/2,1] x [0,1]``.

    The mesh uses ``2 * subdivisions`` subcubes per unit length so the
    reentrant edge at ``x = y = 1/2`` is resolved for every ``k >= 1``.
    """
    k = int(subdivisions)
    if k < 1:
        raise ValueError("subdivisions must be >= 1")
    n = 2 * k
    pts, cells = _grid((n, n, n), np.full(3, 1.0 / n),
                       keep=lambda i, j, _: not (i >= k and j >= k))
    return _from_cells(pts, cells, name=f"lshape-k{k}", level=k)
