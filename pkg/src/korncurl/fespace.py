"""Finite-element spaces on a :class:`~korncurl.mesh.Mesh`.

Two spaces are provided:

* ``LagrangeSpace`` -- continuous P1 fields with ``ncomp`` components
  (``ncomp=3`` is the displacement space). DOF ``c * V + v``.
* ``EdgeMatrixSpace`` -- 3x3 matrix fields whose rows are lowest-order
  Nedelec (Whitney) edge fields. DOF ``r * E + e`` is the line integral of
  row ``r`` along edge ``e`` in the global (ascending vertex) direction.

On a cell, the Whitney function of local edge ``(i, j)`` is
``lambda_i grad(lambda_j) - lambda_j grad(lambda_i)`` and its curl is
``2 grad(lambda_i) x grad(lambda_j)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import MeshMismatch, OutOfRange, WrongSpace
from .mesh import LOCAL_EDGES, Mesh, Region, boundary_edges
from .quadrature import GAUSS2_EDGE, QuadratureRule, keast4
from .tensor3 import anti

LAGRANGE = "lagrange-p1-vector"
EDGE = "edge-matrix"


def cell_geometry(mesh: Mesh):
    """Barycentric gradients ``(C, 4, 3)`` and volumes ``(C,)``, cached."""
    if "geometry" not in mesh._cache:
        x = mesh.vertices[mesh.cells]
        T = np.ones((mesh.n_cells, 4, 4))
        T[:, :, 1:] = x
        # rows of inv(T) are the affine coefficients of each barycentric
        coef = np.linalg.inv(T)
        grads = np.transpose(coef[:, 1:, :], (0, 2, 1))
        vol = np.abs(np.linalg.det(T)) / 6.0
        mesh._cache["geometry"] = (grads, vol)
    return mesh._cache["geometry"]


def physical_points(mesh: Mesh, bary: np.ndarray) -> np.ndarray:
    """Map barycentric points ``(nq, 4)`` to ``(C, nq, 3)`` physical points."""
    return np.einsum("qi,cid->cqd", bary, mesh.vertices[mesh.cells])


class FeSpace:
    kind: str
    mesh: Mesh

    @property
    def dof_count(self) -> int:
        raise NotImplementedError

    def zeros(self) -> "FieldDofs":
        return FieldDofs(self, np.zeros(self.dof_count))

    def constraint(self, region) -> "Constraint":
        if region is None:
            return Constraint(self, np.arange(self.dof_count), None)
        region = Region.parse(region)
        fixed = self.boundary_dofs(region)
        free = np.setdiff1d(np.arange(self.dof_count), fixed)
        return Constraint(self, free, region)

    def _check_same_mesh(self, other: "FeSpace"):
        if other.mesh is not self.mesh:
            raise MeshMismatch("spaces live on different meshes")


class LagrangeSpace(FeSpace):
    def __init__(self, mesh: Mesh, ncomp: int = 3):
        self.mesh = mesh
        self.ncomp = ncomp
        self.kind = LAGRANGE if ncomp == 3 else f"lagrange-p1-{ncomp}"

    @property
    def dof_count(self) -> int:
        return self.ncomp * self.mesh.n_vertices

    def boundary_dofs(self, region) -> np.ndarray:
        verts = self.mesh.boundary_vertices(region)
        V = self.mesh.n_vertices
        return np.concatenate([c * V + verts for c in range(self.ncomp)])

    def local_dofs(self) -> np.ndarray:
        """``(C, 4 * ncomp)`` global DOFs, local index ``c * 4 + i``."""
        V = self.mesh.n_vertices
        return np.concatenate([c * V + self.mesh.cells for c in range(self.ncomp)], axis=1)

    def local_gradients(self) -> np.ndarray:
        """``(C, 4 * ncomp, ncomp, 3)`` gradient of each local basis function."""
        grads, _ = cell_geometry(self.mesh)
        C = self.mesh.n_cells
        out = np.zeros((C, self.ncomp, 4, self.ncomp, 3))
        for c in range(self.ncomp):
            out[:, c, :, c, :] = grads
        return out.reshape(C, 4 * self.ncomp, self.ncomp, 3)


class EdgeMatrixSpace(FeSpace):
    kind = EDGE

    def __init__(self, mesh: Mesh):
        self.mesh = mesh

    @property
    def dof_count(self) -> int:
        return 3 * self.mesh.n_edges

    def boundary_dofs(self, region) -> np.ndarray:
        edges = boundary_edges(self.mesh, region)
        E = self.mesh.n_edges
        return np.concatenate([r * E + edges for r in range(3)])

    def local_dofs(self) -> np.ndarray:
        """``(C, 18)`` global DOFs, local index ``r * 6 + local_edge``."""
        E = self.mesh.n_edges
        ce = self.mesh.cell_to_edges
        return np.concatenate([r * E + ce for r in range(3)], axis=1)

    def whitney(self, bary: np.ndarray) -> np.ndarray:
        """Signed Whitney vectors ``(C, nq, 6, 3)`` at barycentric points."""
        grads, _ = cell_geometry(self.mesh)
        i, j = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
        li, lj = bary[:, i], bary[:, j]                      # (nq, 6)
        w = (li[None, :, :, None] * grads[:, None, j, :]
             - lj[None, :, :, None] * grads[:, None, i, :])
        return w * self.mesh.cell_edge_signs[:, None, :, None]

    def whitney_at(self, cells: np.ndarray, bary: np.ndarray) -> np.ndarray:
        """Signed Whitney vectors ``(N, 6, 3)`` for paired cells/points."""
        grads, _ = cell_geometry(self.mesh)
        g = grads[cells]
        i, j = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
        w = bary[:, i, None] * g[:, j, :] - bary[:, j, None] * g[:, i, :]
        return w * self.mesh.cell_edge_signs[cells][:, :, None]

    def whitney_curl(self) -> np.ndarray:
        """Signed curls ``(C, 6, 3)`` of the Whitney functions (constant)."""
        grads, _ = cell_geometry(self.mesh)
        i, j = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
        c = 2.0 * np.cross(grads[:, i, :], grads[:, j, :])
        return c * self.mesh.cell_edge_signs[:, :, None]

    def local_values(self, bary: np.ndarray) -> np.ndarray:
        """Matrix basis values ``(C, nq, 18, 3, 3)``; basis ``r*6+e`` has row r."""
        w = self.whitney(bary)
        C, nq = w.shape[:2]
        out = np.zeros((C, nq, 3, 6, 3, 3))
        for r in range(3):
            out[:, :, r, :, r, :] = w
        return out.reshape(C, nq, 18, 3, 3)

    def local_curls(self) -> np.ndarray:
        """Matrix basis curls ``(C, 18, 3, 3)``."""
        cw = self.whitney_curl()
        C = cw.shape[0]
        out = np.zeros((C, 3, 6, 3, 3))
        for r in range(3):
            out[:, r, :, r, :] = cw
        return out.reshape(C, 18, 3, 3)


@dataclass
class FieldDofs:
    space: FeSpace
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.space.dof_count,):
            raise ValueError(f"expected {self.space.dof_count} values, got {self.values.shape}")

    def copy(self) -> "FieldDofs":
        return FieldDofs(self.space, self.values.copy())

    def __add__(self, other):
        self.space._check_same_mesh(other.space)
        return FieldDofs(self.space, self.values + other.values)

    def __sub__(self, other):
        self.space._check_same_mesh(other.space)
        return FieldDofs(self.space, self.values - other.values)

    def __mul__(self, s):
        return FieldDofs(self.space, s * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Constraint:
    """Free-DOF bookkeeping for an essential boundary condition."""

    space: FeSpace
    free: np.ndarray
    region: Region | None

    @property
    def n_free(self) -> int:
        return len(self.free)

    def restrict_matrix(self, A):
        A = sp.csr_matrix(A)
        return A[self.free][:, self.free].tocsr()

    def restrict(self, x):
        return np.asarray(x)[self.free]

    def extend(self, x_free) -> np.ndarray:
        x = np.zeros(self.space.dof_count)
        x[self.free] = x_free
        return x

    def project(self, field: FieldDofs) -> FieldDofs:
        return FieldDofs(self.space, self.extend(field.values[self.free]))


# ---------------------------------------------------------------- evaluation

def _check_cell(mesh: Mesh, cell: int):
    if not 0 <= cell < mesh.n_cells:
        raise OutOfRange(f"cell {cell} outside 0..{mesh.n_cells - 1}")


def eval_field(field: FieldDofs, cell: int, point) -> np.ndarray:
    """Value of ``field`` in ``cell`` at barycentric ``point`` (Mat3 or Vec3)."""
    space = field.space
    _check_cell(space.mesh, cell)
    bary = np.asarray(point, dtype=float).reshape(1, 4)
    if isinstance(space, LagrangeSpace):
        verts = space.mesh.cells[cell]
        V = space.mesh.n_vertices
        comps = np.array([field.values[c * V + verts] for c in range(space.ncomp)])
        return comps @ bary[0]
    coeff = field.values[space.local_dofs()[cell]].reshape(3, 6)
    w = space.whitney_at(np.array([cell]), bary)[0]
    return coeff @ w


def eval_curl(field: FieldDofs, cell: int) -> np.ndarray:
    space = field.space
    if not isinstance(space, EdgeMatrixSpace):
        raise WrongSpace("Curl is only defined for edge-matrix fields")
    _check_cell(space.mesh, cell)
    return cell_curls(field)[cell]


def cell_values(field: FieldDofs, rule: QuadratureRule | None = None) -> np.ndarray:
    """Field values at every quadrature point, ``(C, nq, 3, 3)``."""
    space = field.space
    if not isinstance(space, EdgeMatrixSpace):
        raise WrongSpace("cell_values expects an edge-matrix field")
    rule = rule or keast4()
    coeff = field.values[space.local_dofs()]
    return np.einsum("ca,cqaij->cqij", coeff, space.local_values(rule.points))


def cell_curls(field: FieldDofs) -> np.ndarray:
    """Cellwise-constant Curl, ``(C, 3, 3)``."""
    space = field.space
    if not isinstance(space, EdgeMatrixSpace):
        raise WrongSpace("Curl is only defined for edge-matrix fields")
    coeff = field.values[space.local_dofs()]
    return np.einsum("ca,caij->cij", coeff, space.local_curls())


def cell_gradients(u: FieldDofs) -> np.ndarray:
    """Cellwise-constant gradient of a P1 vector field, ``(C, 3, 3)``."""
    space = u.space
    if not isinstance(space, LagrangeSpace):
        raise WrongSpace("gradient expects a Lagrange field")
    coeff = u.values[space.local_dofs()]
    return np.einsum("ca,caij->cij", coeff, space.local_gradients())


# ------------------------------------------------------------- interpolation

def interpolate(space: FeSpace, func) -> FieldDofs:
    """Interpolate an analytic field or an edge-matrix :class:`FieldDofs`.

    ``func`` maps points ``(N, 3)`` to values ``(N, 3, 3)`` (edge-matrix) or
    ``(N, ncomp)`` (Lagrange). Edge DOFs use 2-point Gauss along each edge.
    """
    mesh = space.mesh
    if isinstance(space, LagrangeSpace):
        vals = np.asarray(func(mesh.vertices), dtype=float).reshape(mesh.n_vertices, space.ncomp)
        return FieldDofs(space, vals.T.ravel())

    lo, hi = mesh.vertices[mesh.edges[:, 0]], mesh.vertices[mesh.edges[:, 1]]
    tangent = hi - lo
    s, w = GAUSS2_EDGE
    dofs = np.zeros((3, mesh.n_edges))
    if isinstance(func, FieldDofs):
        src = func
        if src.space.mesh is not mesh:
            raise MeshMismatch("source field lives on another mesh")
        owner = mesh.edge_cells()
        cells, le = owner[:, 0], owner[:, 1]
        coeff = src.values[src.space.local_dofs()[cells]]          # (E, 18)
        i, j = LOCAL_EDGES[le, 0], LOCAL_EDGES[le, 1]
        rows = np.arange(mesh.n_edges)
        lo_is_i = mesh.cells[cells, i] < mesh.cells[cells, j]
        for sq, wq in zip(s, w):
            bary = np.zeros((mesh.n_edges, 4))
            t_i = np.where(lo_is_i, 1.0 - sq, sq)
            bary[rows, i] = t_i
            bary[rows, j] = 1.0 - t_i
            wv = src.space.whitney_at(cells, bary)                 # (E, 6, 3)
            vals = np.einsum("erl,elc->erc", coeff.reshape(-1, 3, 6), wv)
            dofs += wq * np.einsum("erc,ec->re", vals, tangent)
        return FieldDofs(space, dofs.ravel())

    for sq, wq in zip(s, w):
        x = lo + sq * tangent
        vals = np.asarray(func(x), dtype=float).reshape(mesh.n_edges, 3, 3)
        dofs += wq * np.einsum("erc,ec->re", vals, tangent)
    return FieldDofs(space, dofs.ravel())


def interpolate_gradient(u: FieldDofs, space: EdgeMatrixSpace | None = None) -> FieldDofs:
    """Exact edge representation of ``grad u`` for a P1 vector field."""
    if not isinstance(u.space, LagrangeSpace) or u.space.ncomp != 3:
        raise WrongSpace("interpolate_gradient expects a P1 vector field")
    mesh = u.space.mesh
    space = space or EdgeMatrixSpace(mesh)
    if space.mesh is not mesh:
        raise MeshMismatch("target space lives on another mesh")
    comps = u.values.reshape(3, mesh.n_vertices)
    dofs = comps[:, mesh.edges[:, 1]] - comps[:, mesh.edges[:, 0]]
    return FieldDofs(space, dofs.ravel())


def constant_skew_fields(space: EdgeMatrixSpace) -> np.ndarray:
    """DOF vectors ``(3, ndof)`` of the constant fields ``anti(e_i)``."""
    out = []
    for i in range(3):
        A = anti(np.eye(3)[i])
        out.append(interpolate(space, lambda x, A=A: np.broadcast_to(A, (len(x), 3, 3))).values)
    return np.array(out)


# ------------------------------------------------------ boundary conditions

def apply_tangential_bc(obj, region, space: FeSpace | None = None):
    """Impose vanishing tangential trace on ``region`` by DOF elimination.

    * ``FieldDofs`` -> copy with the boundary DOFs set to zero
    * sparse/dense matrix -> ``(condensed matrix, Constraint)``; pass ``space``
    * vector -> ``(restricted vector, Constraint)``; pass ``space``
    """
    if isinstance(obj, FieldDofs):
        return obj.space.constraint(region).project(obj)
    if space is None:
        raise TypeError("space is required to constrain a bare matrix or vector")
    con = space.constraint(region)
    if sp.issparse(obj) or (isinstance(obj, np.ndarray) and obj.ndim == 2):
        return con.restrict_matrix(obj), con
    return con.restrict(obj), con


# ---------------------------------------------- integration-by-parts check

@dataclass(frozen=True)
class AffineMatrixField:
    """``Q(x) = Q0 + G x``, i.e. ``Q_rc = Q0_rc + G_rcd x_d``."""

    Q0: np.ndarray
    G: np.ndarray

    @classmethod
    def random(cls, rng, scale=1.0):
        return cls(scale * rng.standard_normal((3, 3)), scale * rng.standard_normal((3, 3, 3)))

    def __call__(self, x):
        return self.Q0 + np.einsum("rcd,...d->...rc", self.G, x)

    def curl(self) -> np.ndarray:
        # (Curl Q)_ri = eps_ijk d_j Q_rk
        eps = np.zeros((3, 3, 3))
        for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            eps[i, j, k], eps[i, k, j] = 1.0, -1.0
        return np.einsum("ijk,rkj->ri", eps, self.G)


def check_tangential_trace_ibp(P: FieldDofs, Q: AffineMatrixField) -> tuple[float, float]:
    """Return ``(|int <Curl P, Q> - <P, Curl Q>|, scale)``.

    ``scale`` is ``||P||_L2 * (||Q||_L2 + ||Curl Q||_L2)``, the natural size
    of either integral. With whole-boundary tangential BC the residual is
    zero up to rounding.
    """
    space = P.space
    if not isinstance(space, EdgeMatrixSpace):
        raise WrongSpace("trace check needs an edge-matrix field")
    rule = keast4()
    _, vol = cell_geometry(space.mesh)
    wq = vol[:, None] * rule.weights[None, :] * 6.0
    xq = physical_points(space.mesh, rule.points)
    Qv = Q(xq)                                  # (C, nq, 3, 3)
    curlQ = Q.curl()
    Pv = cell_values(P, rule)
    CP = cell_curls(P)
    lhs = np.einsum("cq,cij,cqij->", wq, CP, Qv)
    rhs = np.einsum("cq,cqij,ij->", wq, Pv, curlQ)
    normP = np.sqrt(np.einsum("cq,cqij,cqij->", wq, Pv, Pv))
    normQ = np.sqrt(np.einsum("cq,cqij,cqij->", wq, Qv, Qv))
    scale = normP * (normQ + np.sqrt(vol.sum()) * np.linalg.norm(curlQ))
    return float(abs(lhs - rhs)), float(scale)
