"""Symmetric quadrature rules on the reference tetrahedron."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points ``(nq, 4)`` and weights summing to 1/6."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def n_points(self) -> int:
        return len(self.weights)


def monomial_integral(a: int, b: int, c: int) -> float:
    """Exact integral of ``x^a y^b z^c`` over the reference tetrahedron."""
    return factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)


def _orbit(coords):
    return np.array(sorted(set(itertools.permutations(coords))), dtype=float)


def _fit_weights(orbits, degree):
    # one weight per orbit, matched to every monomial up to ``degree``
    rows, rhs = [], []
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            for c in range(degree + 1 - a - b):
                rows.append([np.sum(o[:, 1] ** a * o[:, 2] ** b * o[:, 3] ** c) for o in orbits])
                rhs.append(monomial_integral(a, b, c))
    w, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    return w


@lru_cache(maxsize=None)
def keast4() -> QuadratureRule:
    """4-point rule, exact for degree 2."""
    a = (5.0 + 3.0 * np.sqrt(5.0)) / 20.0
    b = (5.0 - np.sqrt(5.0)) / 20.0
    pts = _orbit((a, b, b, b))
    return QuadratureRule(pts, np.full(4, 1.0 / 24.0), 2)


@lru_cache(maxsize=None)
def keast15() -> QuadratureRule:
    """15-point rule, exact for degree 5."""
    a1, a2 = 0.0919710780527230327888451, 0.3197936278296299425215713
    b = (1.0 - np.sqrt(0.6)) / 4.0
    orbits = [
        _orbit((0.25, 0.25, 0.25, 0.25)),
        _orbit((a1, a1, a1, 1 - 3 * a1)),
        _orbit((a2, a2, a2, 1 - 3 * a2)),
        _orbit((b, b, 0.5 - b, 0.5 - b)),
    ]
    w = _fit_weights(orbits, 5)
    pts = np.concatenate(orbits)
    weights = np.concatenate([np.full(len(o), wi) for o, wi in zip(orbits, w)])
    return QuadratureRule(pts, weights, 5)


def exactness_error(rule: QuadratureRule, degree: int) -> float:
    """Largest monomial integration error up to ``degree``."""
    x = rule.points[:, 1:]
    err = 0.0
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            for c in range(degree + 1 - a - b):
                approx = np.dot(rule.weights, x[:, 0] ** a * x[:, 1] ** b * x[:, 2] ** c)
                err = max(err, abs(approx - monomial_integral(a, b, c)))
    return err


GAUSS2_EDGE = (np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)]), np.array([0.5, 0.5]))
