"""Discrete Korn constants for incompatible fields and related estimates.

At ``p = 2`` the constant comes from the generalized eigenproblem

    (S + C) x = lambda M x,

with ``S`` the sym-mass, ``C`` the curl-curl and ``M`` the mass matrix of
the edge-matrix space restricted to the DOFs that survive the tangential
boundary condition. Then ``||P||^2 <= lambda_min^-1 (||sym P||^2 + ||Curl P||^2)``
holds for every discrete field, and ``c = lambda_min^-1/2`` is sharp.

For general ``p`` the same combined denominator is used,
``(||sym P||_p^p + ||Curl P||_p^p)^(1/p)``, so that ``p = 2`` reduces to the
eigenvalue bound. The sum ``||sym P||_p + ||Curl P||_p`` is within a factor
``2^(1 - 1/p)`` of it; reports carry that factor.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateDenominator, InvalidP, WrongSpace
from .fespace import (EdgeMatrixSpace, FieldDofs, LagrangeSpace, cell_values,
                      constant_skew_fields, interpolate_gradient)
from .forms import (DEFAULT_EPS, _check_p, _functional, _weights, assemble_curl_curl,
                    assemble_h1_stiffness, assemble_mass, assemble_sym_mass)
from .linalg import KERNEL_TOL, CholeskyFactor, smallest_generalized_eigs
from .mesh import Mesh, Region
from .quadrature import keast4, keast15
from .tensor3 import anti, skew

# exact Levi-Civita symbol
EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    EPS3[_i, _j, _k], EPS3[_i, _k, _j] = 1.0, -1.0


def edge_space(mesh: Mesh) -> EdgeMatrixSpace:
    """The edge-matrix space of ``mesh``, shared by all callers."""
    if "edge_space" not in mesh._cache:
        mesh._cache["edge_space"] = EdgeMatrixSpace(mesh)
    return mesh._cache["edge_space"]


def korn_matrices(space: EdgeMatrixSpace):
    """``(mass, sym_mass, curl_curl)`` CSR matrices, cached on the mesh."""
    cache = space.mesh._cache
    if "korn_matrices" not in cache:
        cache["korn_matrices"] = (assemble_mass(space).matrix,
                                  assemble_sym_mass(space).matrix,
                                  assemble_curl_curl(space).matrix)
    return cache["korn_matrices"]


def conversion_factor(p: float) -> float:
    """``sup (a + b) / (a^p + b^p)^(1/p)`` over ``a, b >= 0``."""
    return 2.0 ** (1.0 - 1.0 / p)


@dataclass
class KornEstimate:
    p: float
    region: str | None
    level: int
    lambda_min: float | None
    constant: float
    extremal: FieldDofs
    kernel_dim: int = 0
    eigenvalues: np.ndarray | None = None
    iterations: int = 0
    residuals: np.ndarray | None = None
    restarts: int = 0
    seed: int = 0
    history: list = field(default_factory=list)
    sum_norm_ratio: float = float("nan")
    diagnostics: dict = field(default_factory=dict)

    @property
    def conversion_factor(self) -> float:
        return conversion_factor(self.p)

    def check_invariants(self, rtol=1e-8) -> bool:
        """Positive constant, extremal field obeys its BC and the p=2 bound."""
        if not (np.isfinite(self.constant) and self.constant > 0):
            return False
        space = self.extremal.space
        x = self.extremal.values
        if self.region is not None:
            if np.any(x[space.boundary_dofs(self.region)] != 0.0):
                return False
        if self.p == 2:
            M, S, C = korn_matrices(space)
            lhs = x @ (M @ x)
            rhs = x @ (S @ x) + x @ (C @ x)
            return lhs <= self.constant ** 2 * rhs * (1 + rtol)
        return True

    def to_record(self) -> dict:
        rec = {"p": self.p, "region": self.region, "k": self.level,
               "lambda_min": self.lambda_min, "constant": self.constant,
               "kernel_dim": self.kernel_dim, "iterations": self.iterations,
               "restarts": self.restarts, "seed": self.seed,
               "sum_norm_ratio": self.sum_norm_ratio,
               "conversion_factor": self.conversion_factor}
        for key, val in self.diagnostics.items():
            if np.isscalar(val):
                rec[key] = val.item() if isinstance(val, np.generic) else val
        return rec


def _region_name(region):
    return None if region is None else Region.parse(region).value


def _sum_norm_ratio(space, x, p, eps=DEFAULT_EPS):
    n = _functional(space, "field").norm(x, p, eps)
    d = _functional(space, "sym").norm(x, p, eps) + _functional(space, "curl").norm(x, p, eps)
    return n / d if d > 0 else float("inf")


# ------------------------------------------------------------ p = 2 constant

def korn_constant_p2(mesh: Mesh, region="whole-boundary", k_eigs: int = 4, tol: float = 1e-10,
                     seed: int = 0) -> KornEstimate:
    """Smallest eigenvalue of ``(S + C, M)`` with tangential BC on ``region``.

    With ``region=None`` there is no boundary condition and the operator
    has a kernel made of constant skew fields. The estimate then reports
    ``kernel_dim`` and the first eigenvalue above the kernel, which gives
    the constant on the mass-orthogonal complement of the kernel.
    ``diagnostics['kernel_projection_error']`` measures how far the kernel
    eigenvectors are from the span of the interpolated ``anti(e_i)``.
    """
    t0 = time.perf_counter()
    space = edge_space(mesh)
    M, S, C = korn_matrices(space)
    A = S + C
    con = space.constraint(region)
    Af, Mf = con.restrict_matrix(A), con.restrict_matrix(M)
    n = con.n_free
    k = min(n, k_eigs + (3 if region is None else 0))
    res = smallest_generalized_eigs(Af, Mf, k, tol=tol, seed=seed)

    kernel = res.kernel_dimension(KERNEL_TOL)
    diagnostics = {"n_free": n, "shift": res.shift}
    if region is None:
        diagnostics["kernel_projection_error"] = _kernel_projection_error(
            space, res.eigenvectors[:, :kernel], M)
    if kernel >= len(res.eigenvalues):
        raise DegenerateDenominator("no eigenvalue above the kernel was computed; raise k_eigs")
    lam = float(res.eigenvalues[kernel])
    x = con.extend(res.eigenvectors[:, kernel])
    diagnostics["seconds"] = time.perf_counter() - t0
    return KornEstimate(p=2.0, region=_region_name(region), level=mesh.level, lambda_min=lam,
                        constant=lam ** -0.5, extremal=FieldDofs(space, x), kernel_dim=kernel,
                        eigenvalues=res.eigenvalues, iterations=res.iterations,
                        residuals=res.residuals, seed=seed,
                        sum_norm_ratio=_sum_norm_ratio(space, x, 2.0), diagnostics=diagnostics)


def _kernel_projection_error(space, V, M) -> float:
    """Largest mass-norm distance between M-normalized columns of ``V`` and
    the span of the constant skew interpolants (and back)."""
    if V.shape[1] == 0:
        return float("inf")
    Z = constant_skew_fields(space).T

    def dist(X, Y):
        # columns of X projected onto span(Y), both measured in the M-norm
        G = Y.T @ (M @ Y)
        coef = np.linalg.solve(G, Y.T @ (M @ X))
        R = X - Y @ coef
        nx = np.sqrt(np.einsum("ij,ij->j", X, M @ X))
        return np.max(np.sqrt(np.abs(np.einsum("ij,ij->j", R, M @ R))) / nx)

    return float(max(dist(V, Z), dist(Z, V)))


# ------------------------------------------------------- general-p ratio

def _norm_powers(funcs, x, p, eps):
    fN, fS, fC = funcs
    N = fN.value(x, p, eps)
    D = fS.value(x, p, eps) + fC.value(x, p, eps)
    return N, D


def korn_ratio_maximize_p(mesh: Mesh, region="whole-boundary", p: float = 2.0, restarts: int = 10,
                          max_iters: int = 300, seed: int = 0, eps: float = DEFAULT_EPS,
                          start: FieldDofs | None = None, tol: float = 1e-12) -> KornEstimate:
    """Lower bound for the discrete ``L^p`` constant by projected ascent.

    Maximizes ``rho(P) = ||P||_p / (||sym P||_p^p + ||Curl P||_p^p)^(1/p)``
    over fields that satisfy the tangential BC on ``region``. Each restart
    starts from i.i.d. normal DOFs (restart 0 from ``start`` when given)
    and takes preconditioned gradient steps on ``log rho`` with Armijo
    backtracking; a step is accepted only if ``rho`` does not decrease.
    The preconditioner is the Cholesky factor of the ``p = 2`` operator, so
    at ``p = 2`` the unit trial step is one inverse-iteration step.
    """
    _check_p(p)
    if region is None:
        raise DegenerateDenominator("without a boundary condition the ratio is unbounded "
                                    "on constant skew fields")
    t0 = time.perf_counter()
    space = edge_space(mesh)
    M, S, C = korn_matrices(space)
    con = space.constraint(region)
    Mf = con.restrict_matrix(M)
    key = ("korn_precond", _region_name(region))
    if key not in mesh._cache:
        mesh._cache[key] = CholeskyFactor(con.restrict_matrix(S + C))
    K = mesh._cache[key]
    funcs = [_functional(space, w) for w in ("field", "sym", "curl")]
    rng = np.random.default_rng(seed)

    def evaluate(xf):
        x = con.extend(xf)
        N, D = _norm_powers(funcs, x, p, eps)
        if D ** (1.0 / p) < 1e-14:
            raise DegenerateDenominator(f"denominator {D:.3e} at an admissible iterate")
        return x, N, D, (np.log(N) - np.log(D)) / p

    def gradient(x, N, D):
        gN = funcs[0].gradient(x, p, eps)
        gD = funcs[1].gradient(x, p, eps) + funcs[2].gradient(x, p, eps)
        return con.restrict((gN / N - gD / D) / p)

    best = None
    finals, histories, total_iters, backtracks = [], [], 0, 0
    for r in range(restarts):
        if r == 0 and start is not None:
            xf = con.restrict(start.values).astype(float)
        else:
            xf = rng.standard_normal(con.n_free)
        xf /= np.sqrt(xf @ (Mf @ xf))
        x, N, D, f = evaluate(xf)
        hist = [float(np.exp(f))]
        step = D
        for it in range(max_iters):
            g = gradient(x, N, D)
            d = K.solve(g)
            slope = g @ d
            if slope <= 1e-30:
                break
            t = step
            accepted = False
            for _ in range(60):
                trial = xf + t * d
                trial /= np.sqrt(trial @ (Mf @ trial))
                xt, Nt, Dt, ft = evaluate(trial)
                if ft >= f + 1e-4 * t * slope:
                    accepted = True
                    break
                t *= 0.5
                backtracks += 1
            total_iters += 1
            if not accepted:
                break
            gain = ft - f
            xf, x, N, D, f = trial, xt, Nt, Dt, ft
            hist.append(float(np.exp(f)))
            step = t * 1.5 if t == step else t
            if gain < tol:
                break
        finals.append(hist[-1])
        histories.append(hist)
        if best is None or hist[-1] > best[0]:
            best = (hist[-1], x.copy())

    ratio, x = best
    spread = (max(finals) - min(finals)) / max(finals)
    diagnostics = {"restart_spread": spread, "restart_min": min(finals), "restart_max": max(finals),
                   "backtracks": backtracks, "seconds": time.perf_counter() - t0, "eps": eps,
                   "restart_ratios": finals}
    return KornEstimate(p=float(p), region=_region_name(region), level=mesh.level,
                        lambda_min=ratio ** -2 if p == 2 else None, constant=ratio,
                        extremal=FieldDofs(space, x), iterations=total_iters, restarts=restarts,
                        seed=seed, history=histories,
                        sum_norm_ratio=_sum_norm_ratio(space, x, p, eps), diagnostics=diagnostics)


# --------------------------------------------------------- skew shifts

@dataclass(frozen=True)
class SkewShift:
    A: np.ndarray
    p: float = 2.0
    iterations: int = 0

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.shape != (3, 3) or np.max(np.abs(A + A.T)) > 1e-12 * max(1.0, np.abs(A).max()):
            raise ValueError("shift must be a skew-symmetric 3x3 matrix")
        object.__setattr__(self, "A", 0.5 * (A - A.T))

    @property
    def axial(self) -> np.ndarray:
        return np.array([self.A[2, 1], self.A[0, 2], self.A[1, 0]])


def _edge_field(P):
    if not isinstance(P, FieldDofs) or not isinstance(P.space, EdgeMatrixSpace):
        raise WrongSpace("expected an edge-matrix field")
    return P


def field_integral(P: FieldDofs) -> np.ndarray:
    """``int P dx`` (exact: the field is cellwise linear)."""
    _edge_field(P)
    rule = keast4()
    return np.einsum("cq,cqij->ij", _weights(P.space.mesh, rule), cell_values(P, rule))


def linear_forms(P: FieldDofs, shift: SkewShift | None = None) -> np.ndarray:
    """``l_alpha(P) = int (skew P)_ij dx`` for ``(i, j) = (0,1), (0,2), (1,2)``.

    The forms see only the skew part; on the kernel (constant skew fields)
    they coincide with ``int P_ij``. A shift adds ``|Omega| A``.
    """
    S = skew(field_integral(P))
    if shift is not None:
        S = S + P.space.mesh.volume() * shift.A
    return np.array([S[0, 1], S[0, 2], S[1, 2]])


def proof_shift(P: FieldDofs) -> SkewShift:
    """``|Omega| A_ij = -int P_ij`` for ``i < j``, extended skew-symmetrically."""
    I = field_integral(P) / P.space.mesh.volume()
    A = np.zeros((3, 3))
    for i, j in ((0, 1), (0, 2), (1, 2)):
        A[i, j], A[j, i] = -I[i, j], I[i, j]
    return SkewShift(A)


def shifted_norm_p(P: FieldDofs, a, p: float) -> float:
    """``int |P + anti(a)|^p dx`` by the degree-5 rule."""
    rule = keast15()
    w = _weights(P.space.mesh, rule)
    vals = cell_values(P, rule) + anti(np.asarray(a, dtype=float))
    return float(np.sum(w * np.sqrt(np.einsum("cqij,cqij->cq", vals, vals)) ** p))


def optimal_skew_shift(P: FieldDofs, p: float = 2.0, tol: float = 1e-10,
                       max_sweeps: int = 500) -> SkewShift:
    """Skew ``A`` minimizing ``||P + A||_p``.

    At ``p = 2`` this is ``A = -mean(skew P)``. Otherwise coordinate descent
    over the axial vector, started from the ``p = 2`` shift, with a pattern
    move along each sweep's displacement. Each 1-D minimization is the
    bracketed root of the exact partial derivative (Brent), because value
    comparisons alone cannot locate a smooth minimum better than about
    ``sqrt(machine eps)``. Stops when no coordinate moves by more than ``tol``.
    """
    _edge_field(P)
    if not (p > 1.0 and np.isfinite(p)):
        raise InvalidP(f"p must satisfy 1 < p < inf, got {p}")
    A2 = -skew(field_integral(P)) / P.space.mesh.volume()
    if p == 2:
        return SkewShift(A2, 2.0, 0)

    rule = keast15()
    w = _weights(P.space.mesh, rule)
    vals = cell_values(P, rule)
    basis = np.array([anti(e) for e in np.eye(3)])

    def slope(a, d):
        # derivative of int |P + anti(a)|^p along anti(d)
        V = vals + anti(a)
        s = np.einsum("cqij,cqij->cq", V, V)
        coef = w * p * np.where(s > 0, s, 1.0) ** (0.5 * p - 1.0) * (s > 0)
        return float(np.sum(coef * np.einsum("cqij,ij->cq", V, np.einsum("k,kij->ij", d, basis))))

    def line_root(a, d):
        g0 = slope(a, d)
        if g0 == 0.0:
            return 0.0
        step = -np.sign(g0) * max(1e-3, np.abs(a).max())
        lo, hi = 0.0, step
        while np.sign(slope(a + hi * d, d)) == np.sign(g0):
            lo, hi = hi, 2.0 * hi
        return brentq(lambda t: slope(a + t * d, d), min(lo, hi), max(lo, hi), xtol=1e-15, rtol=1e-15)

    a = np.array([A2[2, 1], A2[0, 2], A2[1, 0]])
    for sweep in range(1, max_sweeps + 1):
        a_old = a.copy()
        for i in range(3):
            e = np.eye(3)[i]
            a = a + line_root(a, e) * e
        d = a - a_old
        if np.any(d):
            a = a + line_root(a, d) * d
        if np.abs(a - a_old).max() < tol:
            break
    return SkewShift(anti(a), float(p), sweep)


# ----------------------------------------------- H^-1 norms (p = 2 only)

def h1_stiffness(mesh: Mesh, ncomp: int):
    key = ("h1", ncomp)
    if key not in mesh._cache:
        mesh._cache[key] = assemble_h1_stiffness(mesh, ncomp=ncomp)
    return mesh._cache[key]


def dual_norm_hminus1(load, stiffness) -> float:
    """``sqrt(f^T K^-1 f)`` for a load laid out ``(ncomp, n_interior)``."""
    return stiffness.dual_norm(load)


@dataclass(frozen=True)
class InequalityReport:
    lhs: float
    terms: dict

    @property
    def rhs(self) -> float:
        return float(sum(self.terms.values()))

    @property
    def ratio(self) -> float:
        if self.lhs == 0.0:
            return 0.0
        return self.lhs / self.rhs if self.rhs > 0 else float("inf")


def check_lemma_basic(P: FieldDofs) -> InequalityReport:
    """``||P|| <= c (||skew P||_{-1} + ||sym P|| + ||Curl P||_{-1})`` at p=2.

    The Curl term is the distributional pairing ``<Curl P, Phi> = int <P, Curl Phi>``
    against zero-trace matrix test functions ``Phi = E_ab phi``, which needs
    no boundary condition on ``P``.
    """
    _edge_field(P)
    mesh = P.space.mesh
    H = h1_stiffness(mesh, 9)
    rule = keast15()
    w = _weights(mesh, rule)
    vals = cell_values(P, rule)                                       # (C, nq, 3, 3)
    sk = skew(vals)
    sy = vals - sk
    lhs = np.sqrt(np.sum(w * np.einsum("cqij,cqij->cq", vals, vals)))
    sym_l2 = np.sqrt(np.sum(w * np.einsum("cqij,cqij->cq", sy, sy)))
    skew_load = H.loads(sk.reshape(*sk.shape[:2], 9), rule)
    # int <P, Curl(E_ab phi)> = int P_ac eps_cdb d_d phi
    T = np.einsum("nqak,kdb->nqabd", vals, EPS3).reshape(*vals.shape[:2], 9, 3)
    curl_load = H.grad_loads(T, rule)
    return InequalityReport(float(lhs), {"skew_dual": H.dual_norm(skew_load),
                                         "sym_l2": float(sym_l2),
                                         "curl_dual": H.dual_norm(curl_load)})


def necas_spot_check(f: FieldDofs) -> InequalityReport:
    """``||f|| <= c (||f||_{-1} + ||grad f||_{-1})`` for a scalar P1 ``f``.

    The derivative loads are ``<d_i f, phi> = -int f d_i phi``.
    """
    if not isinstance(f.space, LagrangeSpace) or f.space.ncomp != 1:
        raise WrongSpace("expected a scalar P1 field")
    mesh = f.space.mesh
    H1, H3 = h1_stiffness(mesh, 1), h1_stiffness(mesh, 3)
    rule = keast15()
    w = _weights(mesh, rule)
    fq = np.einsum("cv,qv->cq", f.values[mesh.cells], rule.points)
    lhs = np.sqrt(np.sum(w * fq * fq))
    f_load = H1.loads(fq[..., None], rule)
    vals = -fq[:, :, None, None] * np.eye(3)[None, None]             # (C, nq, 3, 3)
    g_load = H3.grad_loads(vals, rule)
    return InequalityReport(float(lhs), {"f_dual": H1.dual_norm(f_load),
                                         "grad_dual": H3.dual_norm(g_load)})


def random_edge_field(space: EdgeMatrixSpace, rng, region=None) -> FieldDofs:
    """i.i.d. standard normal DOFs, then the BC projection for ``region``."""
    x = FieldDofs(space, rng.standard_normal(space.dof_count))
    return space.constraint(region).project(x)


def lemma_sample(mesh: Mesh, n: int = 200, seed: int = 0) -> np.ndarray:
    """Lemma ratios of ``n`` random unconstrained fields."""
    space = edge_space(mesh)
    rng = np.random.default_rng(seed)
    return np.array([check_lemma_basic(random_edge_field(space, rng)).ratio for _ in range(n)])


def necas_sample(mesh: Mesh, n: int = 100, seed: int = 0) -> np.ndarray:
    """Necas ratios of ``n`` random scalar P1 fields."""
    space = LagrangeSpace(mesh, ncomp=1)
    rng = np.random.default_rng(seed)
    return np.array([necas_spot_check(FieldDofs(space, rng.standard_normal(space.dof_count))).ratio
                     for _ in range(n)])


# -------------------------------------------------- sampled inequality

SAMPLE_MODES = ("general", "compatible", "skew")


@dataclass(frozen=True)
class SampleReport:
    mode: str
    p: float
    violations: int
    ratios: np.ndarray
    histogram: tuple

    @property
    def max_ratio(self) -> float:
        return float(self.ratios.max(initial=0.0))


def _sample_dofs(space, con, mode, rng, region, n):
    mesh = space.mesh
    if mode == "general":
        X = np.zeros((space.dof_count, n))
        X[con.free] = rng.standard_normal((con.n_free, n))
        return X
    if mode == "compatible":
        u_space = LagrangeSpace(mesh, 3)
        fixed = mesh.boundary_vertices(region)
        cols = []
        for _ in range(n):
            u = rng.standard_normal((3, mesh.n_vertices))
            u[:, fixed] = 0.0
            cols.append(interpolate_gradient(FieldDofs(u_space, u.ravel()), space).values)
        return np.column_stack(cols)
    if mode == "skew":
        # P1 skew-valued field through its axial vector; exact edge integrals of
        # the linear interpolant, then the BC projection
        lo, hi = mesh.edges[:, 0], mesh.edges[:, 1]
        tangent = mesh.vertices[hi] - mesh.vertices[lo]
        cols = []
        for _ in range(n):
            a = rng.standard_normal((mesh.n_vertices, 3))
            mid = 0.5 * (anti(a[lo]) + anti(a[hi]))
            x = np.einsum("erc,ec->re", mid, tangent).ravel()
            x[~np.isin(np.arange(space.dof_count), con.free)] = 0.0
            cols.append(x)
        return np.column_stack(cols)
    raise ValueError(f"mode must be one of {SAMPLE_MODES}")


def _safe_ratio(num, den):
    # a zero sample (e.g. no interior vertices) has ratio 0
    num, den = np.asarray(num, float), np.asarray(den, float)
    out = np.where(num == 0, 0.0, np.inf)
    return np.divide(num, den, out=out, where=den > 0)


def verify_inequality_sample(mesh: Mesh, region, p: float, n_samples: int, constant: float,
                             mode: str = "general", seed: int = 0, slack: float = 1e-8,
                             eps: float = DEFAULT_EPS) -> SampleReport:
    """Count random admissible fields that violate the Korn bound.

    At ``p = 2`` the check is ``||P||^2 <= (c (1 + slack))^2 (||sym P||^2 + ||Curl P||^2)``.
    For other ``p`` the combined ``L^p`` ratio is compared with ``c``; those
    ratios are reported as a histogram since ``c`` is only a lower bound.
    In skew mode the field is the edge interpolant of a P1 skew-valued
    field, which is skew only up to interpolation error, so the full
    right-hand side is used; ``ratios`` then holds ``||A|| / ||Curl A||`` in
    ``histogram[2]`` for reference.
    """
    _check_p(p)
    if mode not in SAMPLE_MODES:
        raise ValueError(f"mode must be one of {SAMPLE_MODES}")
    space = edge_space(mesh)
    con = space.constraint(region)
    rng = np.random.default_rng(seed)
    X = _sample_dofs(space, con, mode, rng, region, n_samples)
    M, S, C = korn_matrices(space)
    bound = constant * (1.0 + slack)
    if p == 2:
        lhs = np.einsum("ij,ij->j", X, M @ X)
        curl = np.einsum("ij,ij->j", X, C @ X)
        rhs = np.einsum("ij,ij->j", X, S @ X) + curl
        ratios = np.sqrt(_safe_ratio(lhs, rhs))
        violations = int(np.sum(lhs > bound ** 2 * rhs))
        extra = np.sqrt(_safe_ratio(lhs, curl)) if mode == "skew" else None
    else:
        fN, fS, fC = (_functional(space, w) for w in ("field", "sym", "curl"))
        ratios = np.array([_safe_ratio(fN.norm(x, p, eps),
                                       (fS.value(x, p, eps) + fC.value(x, p, eps)) ** (1 / p))
                           for x in X.T])
        violations = int(np.sum(ratios > bound))
        extra = None
    hist = np.histogram(ratios, bins=10)
    return SampleReport(mode, float(p), violations, ratios, (hist[0], hist[1], extra))
