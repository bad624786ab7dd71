import numpy as np
import pytest

from korncurl.quadrature import GAUSS2_EDGE, exactness_error, keast4, keast15, monomial_integral


def test_monomial_integral():
    assert monomial_integral(0, 0, 0) == pytest.approx(1 / 6)
    assert monomial_integral(1, 0, 0) == pytest.approx(1 / 24)
    assert monomial_integral(1, 1, 1) == pytest.approx(1 / 720)


@pytest.mark.parametrize("rule,degree", [(keast4(), 2), (keast15(), 5)])
def test_rule_exactness(rule, degree):
    assert rule.degree == degree
    assert exactness_error(rule, degree) < 1e-15
    assert exactness_error(rule, degree + 1) > 1e-8
    assert abs(rule.weights.sum() - 1 / 6) < 1e-16
    assert np.all(rule.weights > 0)
    assert np.allclose(rule.points.sum(axis=1), 1.0)
    assert np.all(rule.points >= 0)


def test_gauss_edge_exact_to_degree_3():
    s, w = GAUSS2_EDGE
    for d in range(4):
        assert abs(np.dot(w, s ** d) - 1 / (d + 1)) < 1e-15
