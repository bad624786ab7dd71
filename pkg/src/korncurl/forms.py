"""Assembly of bilinear forms, load vectors and the nonlinear p-functionals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import InvalidP, MeshMismatch, WrongSpace
from .mesh import LOCAL_EDGES, boundary_edges
from .fespace import (EdgeMatrixSpace, FeSpace, FieldDofs, LagrangeSpace, cell_geometry,
                      physical_points)
from .linalg import CholeskyFactor, as_csr, symmetry_defect
from .quadrature import QuadratureRule, keast4, keast15
from .tensor3 import skew, sym

DEFAULT_EPS = 1e-10


@dataclass(frozen=True)
class AssembledForm:
    matrix: sp.csr_matrix
    trial: FeSpace
    test: FeSpace
    bc_region: object = None
    symmetric: bool = True

    def __post_init__(self):
        if self.symmetric and self.matrix.shape[0] == self.matrix.shape[1]:
            defect = symmetry_defect(self.matrix)
            scale = max(np.abs(self.matrix.data).max(initial=0.0), 1.0)
            if defect > 1e-12 * scale:
                raise ArithmeticError(f"form flagged symmetric but defect is {defect:.2e}")

    def quadratic(self, x) -> float:
        x = x.values if isinstance(x, FieldDofs) else np.asarray(x)
        return float(x @ (self.matrix @ x))


def _weights(mesh, rule: QuadratureRule) -> np.ndarray:
    _, vol = cell_geometry(mesh)
    return 6.0 * vol[:, None] * rule.weights[None, :]


def _scatter(rows_local, cols_local, local, shape):
    C, nr, nc = local.shape
    r = np.repeat(rows_local[:, :, None], nc, axis=2)
    c = np.repeat(cols_local[:, None, :], nr, axis=1)
    return as_csr(sp.coo_matrix((local.ravel(), (r.ravel(), c.ravel())), shape=shape))


def _edge_space(space):
    if not isinstance(space, EdgeMatrixSpace):
        raise WrongSpace("expected an edge-matrix space")
    return space


def _edge_form(space: EdgeMatrixSpace, transform, rule=None) -> AssembledForm:
    rule = rule or keast4()
    B = transform(space.local_values(rule.points))               # (C, nq, 18, 3, 3)
    w = _weights(space.mesh, rule)
    local = np.einsum("cq,cqaij,cqbij->cab", w, B, B)
    dofs = space.local_dofs()
    return AssembledForm(_scatter(dofs, dofs, local, (space.dof_count,) * 2), space, space)


def assemble_mass(space) -> AssembledForm:
    """``int <P, Q> dx``."""
    return _edge_form(_edge_space(space), lambda B: B)


def assemble_sym_mass(space) -> AssembledForm:
    """``int <sym P, sym Q> dx``."""
    return _edge_form(_edge_space(space), sym)


def assemble_skew_mass(space) -> AssembledForm:
    """``int <skew P, skew Q> dx``."""
    return _edge_form(_edge_space(space), skew)


def assemble_curl_curl(space) -> AssembledForm:
    """``int <Curl P, Curl Q> dx``; exact with one point since Curl is cellwise constant."""
    space = _edge_space(space)
    _, vol = cell_geometry(space.mesh)
    CB = space.local_curls()
    local = np.einsum("c,caij,cbij->cab", vol, CB, CB)
    dofs = space.local_dofs()
    return AssembledForm(_scatter(dofs, dofs, local, (space.dof_count,) * 2), space, space)


@dataclass(frozen=True)
class BlockForm:
    """Symmetric 2x2 block system for the (u, P) energy."""

    matrix: sp.csr_matrix
    u_space: LagrangeSpace
    P_space: EdgeMatrixSpace
    blocks: dict

    @property
    def split(self) -> int:
        return self.u_space.dof_count

    def quadratic(self, x) -> float:
        return float(x @ (self.matrix @ x))


def assemble_micromorphic_blocks(u_space: LagrangeSpace, P_space: EdgeMatrixSpace) -> BlockForm:
    """Hessian of ``1/2|sym(grad u - P)|^2 + 1/2|sym P|^2 + 1/2|Curl P|^2``."""
    if u_space.mesh is not P_space.mesh:
        raise MeshMismatch("u and P spaces must share a mesh")
    mesh = u_space.mesh
    rule = keast4()
    w = _weights(mesh, rule)
    _, vol = cell_geometry(mesh)
    Gu = sym(u_space.local_gradients())                           # (C, 12, 3, 3)
    BP = sym(P_space.local_values(rule.points))                   # (C, nq, 18, 3, 3)
    du, dP = u_space.local_dofs(), P_space.local_dofs()
    nu, nP = u_space.dof_count, P_space.dof_count

    A_uu = _scatter(du, du, np.einsum("c,caij,cbij->cab", vol, Gu, Gu), (nu, nu))
    A_uP = _scatter(du, dP, -np.einsum("cq,caij,cqbij->cab", w, Gu, BP), (nu, nP))
    A_PP = (2.0 * assemble_sym_mass(P_space).matrix + assemble_curl_curl(P_space).matrix)
    full = as_csr(sp.bmat([[A_uu, A_uP], [A_uP.T, A_PP]]))
    return BlockForm(full, u_space, P_space, {"uu": A_uu, "uP": A_uP, "PP": as_csr(A_PP)})


class ScalarLagrange:
    """Scalar continuous Lagrange space of degree 1 or 2 (test functions for
    the H^-1 Riesz map). Degree-2 DOFs are the vertices followed by the
    edge midpoints, global index ``V + e``.
    """

    def __init__(self, mesh, degree: int = 2):
        if degree not in (1, 2):
            raise ValueError("degree must be 1 or 2")
        self.mesh, self.degree = mesh, degree

    @property
    def dof_count(self) -> int:
        return self.mesh.n_vertices + (self.mesh.n_edges if self.degree == 2 else 0)

    @property
    def n_local(self) -> int:
        return 4 if self.degree == 1 else 10

    def local_dofs(self) -> np.ndarray:
        if self.degree == 1:
            return self.mesh.cells
        return np.concatenate([self.mesh.cells, self.mesh.n_vertices + self.mesh.cell_to_edges], axis=1)

    def boundary_dofs(self) -> np.ndarray:
        verts = self.mesh.boundary_vertices("whole-boundary")
        if self.degree == 1:
            return verts
        return np.concatenate([verts, self.mesh.n_vertices + boundary_edges(self.mesh, "whole-boundary")])

    def interior_dofs(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.dof_count), self.boundary_dofs())

    def values(self, bary) -> np.ndarray:
        """Basis values ``(nq, n_local)``."""
        if self.degree == 1:
            return np.asarray(bary)
        lam = np.asarray(bary)
        i, j = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
        return np.concatenate([lam * (2 * lam - 1), 4 * lam[:, i] * lam[:, j]], axis=1)

    def gradients(self, bary) -> np.ndarray:
        """Basis gradients ``(C, nq, n_local, 3)``."""
        grads, _ = cell_geometry(self.mesh)
        lam = np.asarray(bary)
        nq = len(lam)
        if self.degree == 1:
            return np.broadcast_to(grads[:, None], (len(grads), nq, 4, 3))
        i, j = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
        gv = (4 * lam - 1)[None, :, :, None] * grads[:, None, :, :]
        ge = 4 * (lam[None, :, i, None] * grads[:, None, j, :] + lam[None, :, j, None] * grads[:, None, i, :])
        return np.concatenate([gv, ge], axis=2)


@dataclass(frozen=True)
class H1Stiffness:
    """Componentwise Laplacian on the zero-trace scalar Lagrange space.

    Load vectors are laid out ``(ncomp, n_interior)``, flattened row-major;
    ``dual_norm`` returns ``sqrt(f^T K^-1 f)``, the discrete H^-1 norm.
    """

    matrix: sp.csr_matrix
    scalar: sp.csr_matrix
    scalar_mass: sp.csr_matrix
    space: ScalarLagrange
    interior: np.ndarray
    ncomp: int

    @property
    def mesh(self):
        return self.space.mesh

    def factor(self):
        key = ("h1factor", self.space.degree)
        cache = self.mesh._cache
        if key not in cache:
            cache[key] = CholeskyFactor(self.scalar)
        return cache[key]

    def dual_norm(self, load) -> float:
        load = np.asarray(load, dtype=float).reshape(self.ncomp, -1)
        if load.shape[1] == 0 or not np.any(load):
            return 0.0
        sol = self.factor().solve(load.T)
        return float(np.sqrt(max(np.sum(load.T * sol), 0.0)))

    def poincare_constant(self) -> float:
        """``sup |phi|_L2 / |grad phi|_L2`` over the zero-trace space."""
        w = sla.eigh(self.scalar.toarray(), self.scalar_mass.toarray(), eigvals_only=True)
        return float(1.0 / np.sqrt(w[0]))

    def loads(self, values, rule=None) -> np.ndarray:
        """Loads ``int g_k phi_i`` for ``values`` of shape ``(C, nq, ncomp)``
        sampled at ``rule`` points."""
        rule = rule or keast15()
        w = _weights(self.mesh, rule)
        phi = self.space.values(rule.points)
        local = np.einsum("cq,cqk,qi->kci", w, values, phi)
        full = np.stack([np.bincount(self.space.local_dofs().ravel(), local[k].ravel(),
                                     minlength=self.space.dof_count) for k in range(self.ncomp)])
        return full[:, self.interior]

    def grad_loads(self, values, rule=None) -> np.ndarray:
        """Loads ``int g_k . grad phi_i`` for ``values`` of shape ``(C, nq, ncomp, 3)``."""
        rule = rule or keast15()
        w = _weights(self.mesh, rule)
        G = self.space.gradients(rule.points)
        local = np.einsum("cq,cqkd,cqid->kci", w, values, G)
        full = np.stack([np.bincount(self.space.local_dofs().ravel(), local[k].ravel(),
                                     minlength=self.space.dof_count) for k in range(self.ncomp)])
        return full[:, self.interior]


def assemble_scalar_stiffness(space: ScalarLagrange) -> sp.csr_matrix:
    rule = keast4()
    G = space.gradients(rule.points)
    local = np.einsum("cq,cqid,cqjd->cij", _weights(space.mesh, rule), G, G)
    dofs = space.local_dofs()
    return _scatter(dofs, dofs, local, (space.dof_count,) * 2)


def assemble_scalar_mass(space: ScalarLagrange) -> sp.csr_matrix:
    rule = keast15()
    phi = space.values(rule.points)
    local = np.einsum("cq,qi,qj->cij", _weights(space.mesh, rule), phi, phi)
    dofs = space.local_dofs()
    return _scatter(dofs, dofs, local, (space.dof_count,) * 2)


def assemble_h1_stiffness(mesh, ncomp: int = 9, degree: int = 2) -> H1Stiffness:
    """Block-diagonal vector Laplacian with homogeneous Dirichlet rows removed."""
    space = ScalarLagrange(mesh, degree)
    interior = space.interior_dofs()
    K = assemble_scalar_stiffness(space)
    M = assemble_scalar_mass(space)
    Ki = as_csr(K[interior][:, interior])
    Mi = as_csr(M[interior][:, interior])
    full = as_csr(sp.kron(sp.identity(ncomp), Ki))
    return H1Stiffness(full, Ki, Mi, space, interior, ncomp)


# -------------------------------------------------------------- load vectors

def load_edge_matrix(space: EdgeMatrixSpace, F, rule=None) -> np.ndarray:
    """``b_i = int <F, phi_i> dx`` for an analytic ``F: (N,3) -> (N,3,3)``."""
    rule = rule or keast15()
    mesh = space.mesh
    xq = physical_points(mesh, rule.points)
    Fq = np.asarray(F(xq.reshape(-1, 3)), dtype=float).reshape(mesh.n_cells, rule.n_points, 3, 3)
    B = space.local_values(rule.points)
    local = np.einsum("cq,cqij,cqaij->ca", _weights(mesh, rule), Fq, B)
    return np.bincount(space.local_dofs().ravel(), local.ravel(), minlength=space.dof_count)


def load_lagrange(space: LagrangeSpace, f, rule=None) -> np.ndarray:
    """``b_i = int f . v_i dx`` for ``f: (N,3) -> (N,ncomp)`` or a constant vector."""
    rule = rule or keast15()
    mesh = space.mesh
    xq = physical_points(mesh, rule.points)
    if callable(f):
        fq = np.asarray(f(xq.reshape(-1, 3)), dtype=float).reshape(mesh.n_cells, rule.n_points, space.ncomp)
    else:
        fq = np.broadcast_to(np.asarray(f, dtype=float), (mesh.n_cells, rule.n_points, space.ncomp))
    w = _weights(mesh, rule)
    local = np.einsum("cq,cqk,qi->cki", w, fq, rule.points)     # (C, ncomp, 4)
    return np.bincount(space.local_dofs().ravel(), local.reshape(mesh.n_cells, -1).ravel(),
                       minlength=space.dof_count)


# --------------------------------------------------------- p-functionals

WHICH = ("sym", "curl", "field")


class PFunctional:
    """``sum_cells sum_q w ((|T|^2 + eps^2)^(p/2) - eps^p)`` with
    ``T`` one of ``sym P``, ``Curl P`` or ``P``.

    The ``- eps^p`` offset makes the value exactly zero at ``P = 0`` and
    does not change gradients.
    """

    def __init__(self, space: EdgeMatrixSpace, which: str, rule: QuadratureRule | None = None):
        space = _edge_space(space)
        if which not in WHICH:
            raise ValueError(f"which must be one of {WHICH}")
        self.space, self.which = space, which
        mesh = space.mesh
        if which == "curl":
            _, vol = cell_geometry(mesh)
            self.basis = space.local_curls()[:, None].reshape(mesh.n_cells, 1, 18, 9)
            self.w = vol[:, None]
        else:
            rule = rule or keast15()
            B = space.local_values(rule.points)
            if which == "sym":
                B = sym(B)
            self.basis = B.reshape(mesh.n_cells, rule.n_points, 18, 9)
            self.w = _weights(mesh, rule)
        self.dofs = space.local_dofs()

    def values(self, x) -> np.ndarray:
        """Integrand argument ``T`` at every point, ``(C, nq, 9)``."""
        return np.einsum("ca,cqak->cqk", x[self.dofs], self.basis)

    def value(self, x, p, eps=DEFAULT_EPS) -> float:
        _check_p(p)
        T = self.values(x)
        s = np.sum(T * T, axis=-1) + eps * eps
        return float(np.sum(self.w * (s ** (0.5 * p) - eps ** p)))

    def norm(self, x, p, eps=DEFAULT_EPS) -> float:
        return max(self.value(x, p, eps), 0.0) ** (1.0 / p)

    def delta(self, x, dx, p, eps=DEFAULT_EPS) -> float:
        """``value(x + dx) - value(x)`` without cancellation."""
        _check_p(p)
        T, D = self.values(x), self.values(dx)
        s = np.sum(T * T, axis=-1) + eps * eps
        ds = np.sum(D * (2.0 * T + D), axis=-1)
        safe = np.where(s > 0, s, 1.0)
        change = np.where(s > 0, safe ** (0.5 * p) * np.expm1(0.5 * p * np.log1p(ds / safe)),
                          np.abs(ds) ** (0.5 * p))
        return float(np.sum(self.w * change))

    def gradient(self, x, p, eps=DEFAULT_EPS) -> np.ndarray:
        _check_p(p)
        T = self.values(x)
        s = np.sum(T * T, axis=-1) + eps * eps
        coef = self.w * p * s ** (0.5 * p - 1.0)
        local = np.einsum("cq,cqk,cqak->ca", coef, T, self.basis)
        return np.bincount(self.dofs.ravel(), local.ravel(), minlength=self.space.dof_count)

    def hessian(self, x, p, eps=DEFAULT_EPS) -> sp.csr_matrix:
        _check_p(p)
        T = self.values(x)
        s = np.sum(T * T, axis=-1) + eps * eps
        a = self.w * p * s ** (0.5 * p - 1.0)
        b = self.w * p * (p - 2.0) * s ** (0.5 * p - 2.0)
        TB = np.einsum("cqk,cqak->cqa", T, self.basis)
        local = (np.einsum("cq,cqak,cqbk->cab", a, self.basis, self.basis)
                 + np.einsum("cq,cqa,cqb->cab", b, TB, TB))
        n = self.space.dof_count
        return _scatter(self.dofs, self.dofs, local, (n, n))


def _check_p(p):
    if not p > 1.0 or not np.isfinite(p):
        raise InvalidP(f"p must satisfy 1 < p < inf, got {p}")


def _functional(space, which, rule=None) -> PFunctional:
    key = ("pfunc", which, None if rule is None else id(rule))
    cache = space.mesh._cache
    if key not in cache:
        cache[key] = PFunctional(space, which, rule)
    return cache[key]


def eval_p_functional(P: FieldDofs, p: float, which: str, eps: float = DEFAULT_EPS) -> float:
    return _functional(P.space, which).value(P.values, p, eps)


def eval_p_gradient(P: FieldDofs, p: float, which: str, eps: float = DEFAULT_EPS) -> np.ndarray:
    return _functional(P.space, which).gradient(P.values, p, eps)
