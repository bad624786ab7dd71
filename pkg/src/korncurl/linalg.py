"""Sparse linear algebra: CSR helpers, PCG, Cholesky and a small-eigenpair solver."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .errors import NoConvergence, NotPositiveDefinite, ShapeMismatch

KERNEL_TOL = 1e-10


def as_csr(A) -> sp.csr_matrix:
    """CSR copy with duplicate entries summed and column indices sorted."""
    A = sp.csr_matrix(A, dtype=float)
    A.sum_duplicates()
    A.sort_indices()
    return A


def symmetry_defect(A) -> float:
    A = sp.csr_matrix(A)
    D = (A - A.T).tocoo()
    return float(np.max(np.abs(D.data), initial=0.0))


# ---------------------------------------------------------------------- CG

@dataclass
class CGReport:
    iterations: int
    residual: float
    converged: bool
    history: list = field(default_factory=list)


def cg_solve(A, b, tol=1e-10, maxit=None, preconditioner="jacobi", x0=None):
    """Preconditioned conjugate gradients.

    Stops when ``||b - A x|| <= tol * ||b||``. Returns ``(x, CGReport)``;
    raises :class:`NoConvergence` (with the best iterate in ``report``)
    after ``maxit`` iterations.
    """
    A = as_csr(A)
    b = np.asarray(b, dtype=float)
    n = len(b)
    if A.shape != (n, n):
        raise ShapeMismatch(f"matrix {A.shape} vs rhs {b.shape}")
    maxit = maxit or 10 * n
    if preconditioner == "jacobi":
        d = A.diagonal()
        if np.any(d <= 0):
            raise NotPositiveDefinite("non-positive diagonal entry")
        inv_d = 1.0 / d
    elif preconditioner in (None, "none"):
        inv_d = np.ones(n)
    else:
        raise ValueError(f"unknown preconditioner {preconditioner!r}")

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), CGReport(0, 0.0, True)
    r = b - A @ x
    z = inv_d * r
    d_ = z.copy()
    rz = r @ z
    res = np.linalg.norm(r)
    history = [res]
    best = (res, x.copy())
    for it in range(1, maxit + 1):
        if res <= tol * bnorm:
            return x, CGReport(it - 1, res, True, history)
        Ad = A @ d_
        dAd = d_ @ Ad
        if dAd <= 0:
            raise NotPositiveDefinite("matrix is not positive definite along a search direction")
        alpha = rz / dAd
        x += alpha * d_
        r -= alpha * Ad
        res = np.linalg.norm(r)
        history.append(res)
        if res < best[0]:
            best = (res, x.copy())
        z = inv_d * r
        rz_new = r @ z
        d_ = z + (rz_new / rz) * d_
        rz = rz_new
    if res <= tol * bnorm:
        return x, CGReport(maxit, res, True, history)
    report = CGReport(maxit, best[0], False, history)
    report.best = best[1]
    raise NoConvergence(f"CG stalled at relative residual {best[0] / bnorm:.3e}", report)


# ---------------------------------------------------------------- Cholesky

class CholeskyFactor:
    """Banded Cholesky factorization after reverse Cuthill-McKee ordering."""

    def __init__(self, A):
        A = as_csr(A)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ShapeMismatch(f"matrix must be square, got {A.shape}")
        self.n = n
        self.perm = reverse_cuthill_mckee(A, symmetric_mode=True) if n else np.arange(0)
        Ap = A[self.perm][:, self.perm].tocoo()
        off = Ap.row - Ap.col
        self.bandwidth = int(off.max(initial=0))
        lower = off >= 0
        ab = np.zeros((self.bandwidth + 1, n))
        ab[off[lower], Ap.col[lower]] = Ap.data[lower]
        try:
            self.cb = sla.cholesky_banded(ab, lower=True, check_finite=True)
        except sla.LinAlgError as exc:
            raise NotPositiveDefinite(str(exc)) from None

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        x = np.empty_like(b)
        sol = sla.cho_solve_banded((self.cb, True), b[self.perm], check_finite=False)
        x[self.perm] = sol
        return x


def cholesky_solve(A, b):
    """Direct SPD solve; raises :class:`NotPositiveDefinite` on a bad pivot."""
    return CholeskyFactor(A).solve(b)


# -------------------------------------------------------------- eigenpairs

@dataclass
class EigResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray      # (n, k), M-orthonormal columns
    residuals: np.ndarray
    iterations: int
    shift: float
    seed: int

    def kernel_dimension(self, tol=KERNEL_TOL) -> int:
        return int(np.sum(self.eigenvalues < tol))


def _m_orthonormalize(Y, M, drop=1e-12):
    G = Y.T @ (M @ Y)
    G = 0.5 * (G + G.T)
    w, V = np.linalg.eigh(G)
    keep = w > drop * max(w.max(initial=0.0), 1e-300)
    return Y @ (V[:, keep] / np.sqrt(w[keep]))


def _rayleigh_ritz(Q, A, M):
    Ah = Q.T @ (A @ Q)
    Ah = 0.5 * (Ah + Ah.T)
    theta, S = np.linalg.eigh(Ah)
    return theta, Q @ S


def _orthogonalize(Y, basis, M):
    for _ in range(2):
        if basis.shape[1]:
            Y = Y - basis @ (basis.T @ (M @ Y))
    return Y


def smallest_generalized_eigs(A, M, k, tol=1e-10, maxit=500, seed=0, guard=None, depth=6,
                              inner="auto"):
    """Smallest ``k`` eigenpairs of ``A x = lambda M x``.

    Shift-invert block power iteration, accelerated by Rayleigh-Ritz over
    ``depth`` successive powers of ``(A + tau M)^-1 M`` (a restarted block
    Krylov space). Converged pairs are locked and deflated from the active
    block. The shift ``-tau`` with ``tau = 1e-8 * tr(A) / tr(M)`` keeps the
    inner operator positive definite when ``A`` is only semidefinite. Start
    vectors come from ``numpy.random.default_rng(seed)``.

    Convergence of a pair means ``||A x - lambda M x|| <= tol * ||M x|| * max(1, lambda)``.
    """
    A = as_csr(A)
    M = as_csr(M)
    n = A.shape[0]
    if A.shape != M.shape or A.shape != (n, n):
        raise ShapeMismatch(f"A {A.shape} and M {M.shape} must be equal and square")
    k = int(k)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in 1..{n}")
    guard = max(4, k) if guard is None else guard
    m = min(n, k + guard)

    trM = M.diagonal().sum()
    tau = 1e-8 * max(A.diagonal().sum() / trM, 1e-300)
    K = (A + tau * M).tocsr()
    if inner == "cg" or (inner == "auto" and n > 50000):
        def solve(B):
            return np.column_stack([cg_solve(K, B[:, j], tol=1e-13)[0] for j in range(B.shape[1])])
    else:
        solve = CholeskyFactor(K).solve

    rng = np.random.default_rng(seed)
    locked = np.zeros((n, 0))
    X = _m_orthonormalize(rng.standard_normal((n, m)), M)

    for it in range(1, maxit + 1):
        V = _m_orthonormalize(_orthogonalize(X, locked, M), M)
        block = V
        for _ in range(depth):
            if V.shape[1] >= n - locked.shape[1]:
                break
            Y = _orthogonalize(solve(M @ block), np.column_stack([locked, V]), M)
            block = _m_orthonormalize(Y, M)
            if block.shape[1] == 0:
                break
            V = np.column_stack([V, block])
        theta, Z = _rayleigh_ritz(V, A, M)
        need = k - locked.shape[1]
        R = A @ Z[:, :need] - (M @ Z[:, :need]) * theta[:need]
        res = np.linalg.norm(R, axis=0)
        scale = np.linalg.norm(M @ Z[:, :need], axis=0) * np.maximum(1.0, np.abs(theta[:need]))
        nconv = 0
        while nconv < need and res[nconv] <= tol * scale[nconv]:
            nconv += 1
        if nconv:
            locked = np.column_stack([locked, Z[:, :nconv]])
        if locked.shape[1] >= k:
            break
        X = Z[:, nconv:nconv + m - locked.shape[1]]
    else:
        raise NoConvergence(f"{locked.shape[1]} of {k} eigenpairs converged in {maxit} iterations",
                            {"locked": locked.shape[1], "iterations": maxit})

    theta, Vk = _rayleigh_ritz(_m_orthonormalize(locked, M), A, M)
    R = A @ Vk - (M @ Vk) * theta
    return EigResult(theta[:k], Vk[:, :k], np.linalg.norm(R, axis=0)[:k], it, tau, seed)
