"""Model problems: p-CurlCurl minimization and the coupled (u, P) energy.

p-CurlCurl
    minimize  int 1/p |Curl P|^p + 1/2 |P|^2 - <F, P>      (variant "full-P")
    minimize  int 1/p |Curl P|^p + 1/2 |sym P|^2 - <F, P>  (variant "sym-P")
    over edge-matrix fields with vanishing tangential trace. The sym-P
    energy is coercive exactly because of the Korn inequality for
    incompatible fields; the report records the corresponding eigenvalue.

Coupled (u, P) energy
    1/2 |sym(grad u - P)|^2 + 1/2 |sym P|^2 + 1/2 |Curl P|^2 - <f, u>
    with u = 0 and P x n = 0 on Gamma_D. The relaxed micromorphic
    equilibrium and the static gradient-plasticity potential share this
    energy, so both drivers call one block solve.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import InvalidP, NoConvergence, NotPositiveDefinite
from .fespace import EdgeMatrixSpace, FieldDofs, LagrangeSpace
from .forms import _functional, assemble_micromorphic_blocks, load_edge_matrix, load_lagrange
from .korn import edge_space, korn_matrices
from .linalg import CholeskyFactor, as_csr, smallest_generalized_eigs
from .mesh import Mesh, Region

EPS_PATH = tuple(10.0 ** -k for k in range(2, 11))
VARIANTS = ("full-P", "sym-P")


@dataclass
class SolveReport:
    energy: float
    energy_history: list = field(default_factory=list)
    residual: float = 0.0
    iterations: int = 0
    backtracks: int = 0
    eps_path: tuple = ()
    converged: bool = True
    extra: dict = field(default_factory=dict)

    def is_monotone(self, slack=0.0) -> bool:
        """Energy never increases within a continuation stage."""
        stages = self.energy_history if self.energy_history and isinstance(
            self.energy_history[0], list) else [self.energy_history]
        return all(np.all(np.diff(h) <= slack * max(1.0, abs(h[0]))) for h in stages if len(h) > 1)


# ---------------------------------------------------------------- p-CurlCurl

def pcurlcurl_load(space: EdgeMatrixSpace, F) -> np.ndarray:
    """Load vector ``int <F, Q>``; ``F`` may be a callable, a field or a load."""
    if callable(F):
        return load_edge_matrix(space, F)
    if isinstance(F, FieldDofs):
        M, _, _ = korn_matrices(space)
        return M @ F.values
    F = np.asarray(F, dtype=float)
    if F.shape == ():
        return np.zeros(space.dof_count) if F == 0 else np.full(space.dof_count, float(F))
    return F


def pcurlcurl_operator(mesh: Mesh, x, p: float, variant: str = "full-P", eps: float = 0.0):
    """Gradient of the energy without the load term; ``F := op(P*)``
    manufactures a problem whose discrete solution is ``P*``."""
    space = edge_space(mesh)
    M, S, _ = korn_matrices(space)
    zero = M if variant == "full-P" else S
    x = x.values if isinstance(x, FieldDofs) else np.asarray(x)
    return _functional(space, "curl").gradient(x, p, eps) / p + zero @ x


def _check_range(p):
    if not (1.0 < p <= 2.0):
        raise InvalidP(f"p-CurlCurl needs 1 < p <= 2, got {p}")


def solve_pcurlcurl(mesh: Mesh, F, p: float, variant: str = "full-P", tol: float = 1e-10,
                    eps_path=EPS_PATH, max_newton: int = 100, region="whole-boundary"):
    """Damped Newton with epsilon continuation; returns ``(P, SolveReport)``.

    Each stage minimizes the energy with ``|Curl P|`` regularized as
    ``sqrt(|Curl P|^2 + eps^2)``. Steps use Armijo backtracking; after 30
    failed halvings (or an indefinite Hessian) the step falls back to the
    gradient preconditioned by the ``p = 2`` operator. A stage ends when
    ``||grad|| <= tol * (1 + ||load||)``.
    """
    _check_range(p)
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    space = edge_space(mesh)
    M, S, C = korn_matrices(space)
    Z = M if variant == "full-P" else S
    con = space.constraint(region)
    b = con.restrict(pcurlcurl_load(space, F))
    Zf, Mf = con.restrict_matrix(Z), con.restrict_matrix(M)
    curl = _functional(space, "curl")
    precond = CholeskyFactor(con.restrict_matrix(Z + C))
    gtol = tol * (1.0 + np.linalg.norm(b))

    def energy(xf, eps):
        x = con.extend(xf)
        return curl.value(x, p, eps) / p + 0.5 * xf @ (Zf @ xf) - b @ xf

    def change(xf, d, eps):
        # energy(xf + d) - energy(xf), free of cancellation
        return (curl.delta(con.extend(xf), con.extend(d), p, eps) / p
                + d @ (Zf @ xf - b) + 0.5 * d @ (Zf @ d))

    def grad(xf, eps):
        return con.restrict(curl.gradient(con.extend(xf), p, eps)) / p + Zf @ xf - b

    def hess(xf, eps):
        return as_csr(con.restrict_matrix(curl.hessian(con.extend(xf), p, eps)) / p + Zf)

    xf = np.zeros(con.n_free)
    if p == 2:
        eps_path = eps_path[-1:]
    histories, stage_x = [], []
    iterations = backtracks = fallbacks = 0
    for eps in eps_path:
        E = energy(xf, eps)
        hist = [E]
        g = grad(xf, eps)
        for _ in range(max_newton):
            if np.linalg.norm(g) <= gtol:
                break
            try:
                d = CholeskyFactor(hess(xf, eps)).solve(-g)
            except NotPositiveDefinite:
                d = None
            accepted = False
            for direction in ("newton", "gradient"):
                if direction == "gradient":
                    d = -precond.solve(g)
                    fallbacks += 1
                if d is None:
                    continue
                slope = g @ d
                t = 1.0
                for _ in range(30):
                    dE = change(xf, t * d, eps)
                    if dE <= 1e-4 * t * slope:
                        accepted = True
                        break
                    t *= 0.5
                    backtracks += 1
                if accepted:
                    break
            iterations += 1
            if not accepted:
                # no decrease is representable: rounding level reached
                break
            xf = xf + t * d
            E = E + dE
            hist.append(E)
            g = grad(xf, eps)
        histories.append(hist)
        stage_x.append(xf.copy())
        if np.linalg.norm(g) > gtol:
            report = SolveReport(E, histories, float(np.linalg.norm(g)), iterations, backtracks,
                                 tuple(eps_path), False, {"partial": con.extend(xf)})
            raise NoConvergence(f"stage eps={eps:g} stopped at gradient norm "
                                f"{np.linalg.norm(g):.3e} > {gtol:.3e}", report)

    x = con.extend(xf)
    extra = {"fallback_steps": fallbacks, "variant": variant, "p": p,
             "energy_eps": E}
    if len(stage_x) > 1:
        d = stage_x[-1] - stage_x[-2]
        extra["eps_sensitivity"] = float(np.sqrt(d @ (Mf @ d)))
    if variant == "sym-P":
        extra["coercivity"] = coercivity_eigenvalue(mesh, region)
    final = curl.value(x, p, 0.0) / p + 0.5 * x @ (Z @ x) - con.extend(b) @ x
    report = SolveReport(float(final), histories, float(np.linalg.norm(g)), iterations,
                         backtracks, tuple(eps_path), True, extra)
    return FieldDofs(space, x), report


def coercivity_eigenvalue(mesh: Mesh, region="whole-boundary") -> float:
    """Smallest ``lambda`` of ``(S + C) x = lambda M x`` with BC; positive
    exactly when the sym-P energy is coercive."""
    space = edge_space(mesh)
    M, S, C = korn_matrices(space)
    con = space.constraint(region)
    res = smallest_generalized_eigs(con.restrict_matrix(S + C), con.restrict_matrix(M), 1)
    return float(res.eigenvalues[0])


# ------------------------------------------------------------ coupled (u, P)

def _coupled_system(mesh: Mesh, gamma_D):
    region = Region.parse(gamma_D)
    key = ("coupled", region.value)
    if key not in mesh._cache:
        u_space = LagrangeSpace(mesh, 3)
        P_space = edge_space(mesh)
        block = assemble_micromorphic_blocks(u_space, P_space)
        fixed_u = u_space.boundary_dofs(region)
        fixed_P = u_space.dof_count + P_space.boundary_dofs(region)
        free = np.setdiff1d(np.arange(block.matrix.shape[0]), np.concatenate([fixed_u, fixed_P]))
        mesh._cache[key] = (block, free)
    return mesh._cache[key]


def _body_load(u_space, f):
    if f is None:
        return np.zeros(u_space.dof_count)
    if isinstance(f, np.ndarray) and f.shape == (u_space.dof_count,):
        return f.astype(float)
    return load_lagrange(u_space, f)


def solve_micromorphic(mesh: Mesh, f, gamma_D="whole-boundary", tol: float = 1e-9):
    """Minimize the coupled energy; returns ``(u, P, SolveReport)``.

    ``f`` is a callable body force, a constant 3-vector, or a P1 load
    vector. The residual of each Euler-Lagrange equation is reported
    separately in ``extra`` (``residual_u`` and ``residual_P``).
    """
    block, free = _coupled_system(mesh, gamma_D)
    n_u = block.split
    b = np.zeros(block.matrix.shape[0])
    b[:n_u] = _body_load(block.u_space, f)
    A = as_csr(block.matrix[free][:, free])
    x = np.zeros_like(b)
    if np.any(b[free]):
        x[free] = CholeskyFactor(A).solve(b[free])
    r = np.zeros_like(b)
    r[free] = A @ x[free] - b[free]
    res_u, res_P = float(np.linalg.norm(r[:n_u])), float(np.linalg.norm(r[n_u:]))
    scale = 1.0 + np.linalg.norm(b)
    energy = 0.5 * x @ (block.matrix @ x) - b @ x
    report = SolveReport(float(energy), [float(energy)], max(res_u, res_P), 1, 0, (),
                         max(res_u, res_P) <= tol * scale,
                         {"residual_u": res_u, "residual_P": res_P, "model": "micromorphic",
                          "gamma_D": Region.parse(gamma_D).value})
    if not report.converged:
        raise NoConvergence(f"block residual {report.residual:.3e} above tolerance", report)
    u = FieldDofs(block.u_space, x[:n_u])
    P = FieldDofs(block.P_space, x[n_u:])
    return u, P, report


def solve_plasticity_static(mesh: Mesh, f, gamma_D="whole-boundary", tol: float = 1e-9):
    """Static gradient-plasticity potential with linear hardening.

    Its integrand coincides with the relaxed micromorphic energy, so this
    is the same block solve; the report says so.
    """
    u, P, report = solve_micromorphic(mesh, f, gamma_D, tol)
    report.extra.update(model="plasticity", shared_kernel=True)
    return u, P, report


def block_coercivity(mesh: Mesh, gamma_D="whole-boundary") -> float:
    """Smallest eigenvalue of the constrained (u, P) block matrix."""
    block, free = _coupled_system(mesh, gamma_D)
    A = as_csr(block.matrix[free][:, free])
    if A.shape[0] <= 2000:
        return float(sla.eigvalsh(A.toarray(), subset_by_index=[0, 0])[0])
    I = sp.identity(A.shape[0], format="csr")
    return float(smallest_generalized_eigs(A, I, 1).eigenvalues[0])
