"""Exact 3x3 tensor algebra.

Vectors are ``(3,)`` arrays and matrices ``(3, 3)`` arrays. Most functions
also accept stacked inputs with leading batch dimensions (``(..., 3)`` and
``(..., 3, 3)``), which is how the finite-element code uses them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotSkew

SKEW_TOL = 1e-12
ZERO_TOL = 1e-12

IDENTITY = np.eye(3)


def sym(P):
    return 0.5 * (P + np.swapaxes(P, -1, -2))


def skew(P):
    return 0.5 * (P - np.swapaxes(P, -1, -2))


def dev(P):
    return P - np.trace(P, axis1=-2, axis2=-1)[..., None, None] * IDENTITY / 3.0


def frobenius(P):
    return np.sqrt(np.sum(P * P, axis=(-2, -1)))


def anti(a):
    """Map a vector to the skew matrix with ``anti(a) @ b == a x b``."""
    a = np.asarray(a, dtype=float)
    out = np.zeros(a.shape[:-1] + (3, 3))
    out[..., 0, 1] = -a[..., 2]
    out[..., 0, 2] = a[..., 1]
    out[..., 1, 0] = a[..., 2]
    out[..., 1, 2] = -a[..., 0]
    out[..., 2, 0] = -a[..., 1]
    out[..., 2, 1] = a[..., 0]
    return out


def axl(A, tol=SKEW_TOL):
    """Inverse of :func:`anti`. Raises :class:`NotSkew` if ``A`` is not skew."""
    A = np.asarray(A, dtype=float)
    if np.max(np.abs(A + np.swapaxes(A, -1, -2)), initial=0.0) > tol:
        raise NotSkew("matrix is not skew-symmetric within %g" % tol)
    return np.stack([A[..., 2, 1], A[..., 0, 2], A[..., 1, 0]], axis=-1)


def mat_cross_vec(P, b):
    """Row-wise cross product: row k of the result is ``P[k] x b``."""
    P = np.asarray(P, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.cross(P, b[..., None, :])


def product_identity(a, b):
    """Closed form of ``anti(a) x b``, namely ``b (x) a - <b, a> id``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    outer = b[..., :, None] * a[..., None, :]
    return outer - np.sum(a * b, axis=-1)[..., None, None] * IDENTITY


def check_zero_product_agreement(a, b, tol=ZERO_TOL):
    """Return ``(anti(a) x b == 0, b (x) a == 0)``; the two always agree."""
    lhs = mat_cross_vec(anti(a), b)
    outer = np.outer(b, a)
    return bool(np.max(np.abs(lhs)) <= tol), bool(np.max(np.abs(outer)) <= tol)


def nye_curl_from_grad_axl(G):
    """Curl of a skew field from the gradient ``G`` of its axial vector."""
    G = np.asarray(G, dtype=float)
    tr = np.trace(G, axis1=-2, axis2=-1)
    return tr[..., None, None] * IDENTITY - np.swapaxes(G, -1, -2)


def nye_grad_axl_from_curl(C):
    """Gradient of the axial vector of a skew field, recovered from its Curl."""
    C = np.asarray(C, dtype=float)
    tr = np.trace(C, axis1=-2, axis2=-1)
    return 0.5 * tr[..., None, None] * IDENTITY - np.swapaxes(C, -1, -2)


@dataclass(frozen=True)
class QuadraticField:
    """Vector polynomial ``u_k(x) = c_k + B_kd x_d + 1/2 H_kde x_d x_e``.

    ``H`` is symmetric in its last two indices, so ``H[k]`` is the Hessian
    of ``u_k`` and every derivative is available exactly.
    """

    c: np.ndarray
    B: np.ndarray
    H: np.ndarray

    @classmethod
    def random(cls, rng, scale=1.0):
        c = scale * rng.standard_normal(3)
        B = scale * rng.standard_normal((3, 3))
        H = scale * rng.standard_normal((3, 3, 3))
        return cls(c, B, 0.5 * (H + np.swapaxes(H, 1, 2)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.c + x @ self.B.T + 0.5 * np.einsum("kde,...d,...e->...k", self.H, x, x)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return self.B + np.einsum("kde,...e->...kd", self.H, x)

    def second_derivatives(self):
        # D[i, j, k] = d_i d_j u_k
        return np.transpose(self.H, (1, 2, 0))

    def sym_grad_derivatives(self):
        # E[l, i, k] = d_l (sym grad u)_{ik}
        return 0.5 * (np.transpose(self.H, (2, 0, 1)) + np.transpose(self.H, (2, 1, 0)))


def verify_second_derivative_identity(u: QuadraticField) -> float:
    """Max residual of ``d_i d_j u_k = d_j e_ik + d_i e_jk - d_k e_ij``,
    with ``e = sym grad u``."""
    D = u.second_derivatives()
    E = u.sym_grad_derivatives()
    rhs = (np.transpose(E, (1, 0, 2))            # d_j e_ik -> [i, j, k]
           + E                                   # d_i e_jk
           - np.transpose(E, (1, 2, 0)))         # d_k e_ij
    return float(np.max(np.abs(D - rhs)))


def _curl_of_linear_skew(G):
    # Curl anti(a) for a(x) = a0 + G x, straight from eps_ijk d_j anti(a)_rk
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k], eps[i, k, j] = 1.0, -1.0
    dP = np.einsum("rmk,...mj->...rkj", eps, G)      # d_j anti(a)_rk
    return np.einsum("ijk,...rkj->...ri", eps, dP)


def identity_suite(n: int = 1000, seed: int = 0) -> dict:
    """Max residual of each pointwise identity over ``n`` random inputs.

    The zero-product agreement check is scored as the number of disagreements; a quarter of
    its inputs have a zero vector so both outcomes occur.
    """
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((n, 3)), rng.standard_normal((n, 3))
    out = {}
    out["product_identity"] = float(np.max(np.abs(mat_cross_vec(anti(a), b) - product_identity(a, b))))
    A = skew(rng.standard_normal((n, 3, 3)))
    out["anti_axl"] = float(max(np.max(np.abs(axl(anti(a)) - a)), np.max(np.abs(anti(axl(A)) - A))))
    G = rng.standard_normal((n, 3, 3))
    C = nye_curl_from_grad_axl(G)
    out["nye_forward"] = float(np.max(np.abs(C - _curl_of_linear_skew(G))))
    out["nye_inverse"] = float(np.max(np.abs(nye_grad_axl_from_curl(C) - G)))
    m = n // 4
    a2, b2 = a.copy(), b.copy()
    a2[:m // 2] = 0.0
    b2[m // 2:m] = 0.0
    disagree = sum(len(set(check_zero_product_agreement(x, y))) - 1 for x, y in zip(a2, b2))
    out["zero_product_agreement"] = float(disagree)
    out["second_derivative"] = max(verify_second_derivative_identity(QuadraticField.random(rng))
                                   for _ in range(n))
    return out
