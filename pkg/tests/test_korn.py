import json
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg as sla

from korncurl import korn
from korncurl.errors import DegenerateDenominator, InvalidP, WrongSpace
from korncurl.fespace import FieldDofs, LagrangeSpace, cell_curls, interpolate
from korncurl.mesh import build_box_mesh
from korncurl.tensor3 import anti, sym

BASELINES = json.loads((Path(__file__).parent / "baselines.json").read_text())


def const(A):
    return lambda x: np.broadcast_to(A, (len(x), 3, 3))


def dense_korn(mesh, region):
    space = korn.edge_space(mesh)
    M, S, C = korn.korn_matrices(space)
    con = space.constraint(region)
    return sla.eigh(con.restrict_matrix(S + C).toarray(), con.restrict_matrix(M).toarray())


@pytest.fixture(scope="module")
def est2(cube2):
    return korn.korn_constant_p2(cube2, "whole-boundary")


# ------------------------------------------------------------------ p = 2

def test_k1_whole_boundary_matches_dense(cube1):
    est = korn.korn_constant_p2(cube1, "whole-boundary")
    w, _ = dense_korn(cube1, "whole-boundary")
    assert est.diagnostics["n_free"] == 3
    assert est.lambda_min > 0 and np.isfinite(est.constant)
    assert abs(est.lambda_min - w[0]) < 1e-10 * w[0]
    assert est.check_invariants()


def test_no_bc_kernel_k1(cube1):
    est = korn.korn_constant_p2(cube1, None)
    w, V = dense_korn(cube1, None)
    assert np.sum(w < 1e-10) == 3 and w[3] > 1e-3
    assert est.kernel_dim == 3
    assert est.diagnostics["kernel_projection_error"] < 1e-8
    assert abs(est.lambda_min - w[3]) < 1e-10
    # the dense oracle's kernel is the same span
    space = korn.edge_space(cube1)
    M = korn.korn_matrices(space)[0]
    assert korn._kernel_projection_error(space, V[:, :3], M) < 1e-8


def test_no_bc_kernel_k2(cube2):
    est = korn.korn_constant_p2(cube2, None)
    assert est.kernel_dim == 3
    assert est.diagnostics["kernel_projection_error"] < 1e-8
    assert est.eigenvalues[3] > 1e-3


def test_constants_recorded_and_stable(cube1, cube2, cube3):
    c = [korn.korn_constant_p2(m, "whole-boundary").constant for m in (cube1, cube2, cube3)]
    assert all(np.isfinite(c)) and min(c) > 0
    assert abs(c[2] - c[1]) / c[1] < 0.05


def test_eigenvalues_match_dense_k2(cube2, est2):
    w, _ = dense_korn(cube2, "whole-boundary")
    assert abs(est2.lambda_min - w[0]) < 1e-10
    assert est2.check_invariants()
    assert est2.sum_norm_ratio <= est2.constant * (1 + 1e-12)
    assert est2.sum_norm_ratio * est2.conversion_factor >= est2.constant * (1 - 1e-12)


def test_face_region_nesting(cube2, est2):
    face = korn.korn_constant_p2(cube2, "face-z0")
    assert 0 < face.lambda_min <= est2.lambda_min
    assert face.check_invariants()


def test_record_is_finite(est2):
    rec = est2.to_record()
    assert rec["k"] == 2 and rec["region"] == "whole-boundary"
    assert all(np.isfinite(v) for v in rec.values() if isinstance(v, float))


# ------------------------------------------------------------ general p

def test_ratio_p2_agrees_with_eigen(cube2, est2):
    r = korn.korn_ratio_maximize_p(cube2, "whole-boundary", 2.0, restarts=10)
    assert abs(r.constant - est2.constant) <= 0.02 * est2.constant
    assert r.constant <= est2.constant * (1 + 1e-6)


def test_ratio_polish_from_extremal(cube2, est2):
    r = korn.korn_ratio_maximize_p(cube2, "whole-boundary", 2.0, restarts=1, start=est2.extremal)
    assert abs(r.constant - est2.constant) <= 1e-6 * est2.constant


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_ratio_general_p(cube2, p):
    r = korn.korn_ratio_maximize_p(cube2, "whole-boundary", p, restarts=3, max_iters=100)
    assert np.isfinite(r.constant) and r.constant > 0
    assert all(np.all(np.diff(h) >= 0) for h in r.history)
    assert r.check_invariants()


def test_ratio_errors(cube1):
    with pytest.raises(InvalidP):
        korn.korn_ratio_maximize_p(cube1, "whole-boundary", 1.0)
    with pytest.raises(DegenerateDenominator):
        korn.korn_ratio_maximize_p(cube1, None, 2.0)


# ---------------------------------------------------------- skew shift

def test_shift_of_constant_skew(cube2, rng):
    space = korn.edge_space(cube2)
    v = rng.standard_normal(3)
    P = interpolate(space, const(anti(v)))
    for p in (2.0, 1.5, 3.0):
        sh = korn.optimal_skew_shift(P, p)
        assert np.max(np.abs(sh.A + anti(v))) < 1e-10
        assert korn.shifted_norm_p(P, sh.axial, p) < 1e-18


def test_shift_of_symmetric_field(cube2, rng):
    S = sym(rng.standard_normal((3, 3)))
    P = interpolate(korn.edge_space(cube2), lambda x: S + np.einsum("n,ij->nij", x[:, 0], S))
    assert np.max(np.abs(korn.optimal_skew_shift(P, 2.0).A)) < 1e-13


def test_shift_stationary(cube2, rng):
    P = FieldDofs(korn.edge_space(cube2), rng.standard_normal(3 * cube2.n_edges))
    h = 1e-5
    for p in (2.0, 1.5, 3.0):
        a = korn.optimal_skew_shift(P, p).axial
        g = [(korn.shifted_norm_p(P, a + h * e, p) - korn.shifted_norm_p(P, a - h * e, p)) / (2 * h)
             for e in np.eye(3)]
        assert np.max(np.abs(g)) < 1e-8


def test_linear_forms(cube2, rng):
    P = FieldDofs(korn.edge_space(cube2), rng.standard_normal(3 * cube2.n_edges))
    scale = np.abs(korn.field_integral(P)).max()
    sh = korn.optimal_skew_shift(P, 2.0)
    assert np.max(np.abs(korn.linear_forms(P, sh))) < 1e-12 * max(1.0, scale)
    # the proof's shift cancels the raw upper-triangle integrals instead
    ps = korn.proof_shift(P)
    I = korn.field_integral(P) + cube2.volume() * ps.A
    assert max(abs(I[0, 1]), abs(I[0, 2]), abs(I[1, 2])) < 1e-12 * max(1.0, scale)


def test_shift_errors(cube1):
    P = korn.edge_space(cube1).zeros()
    with pytest.raises(InvalidP):
        korn.optimal_skew_shift(P, 0.5)
    with pytest.raises(WrongSpace):
        korn.optimal_skew_shift(LagrangeSpace(cube1).zeros(), 2.0)
    with pytest.raises(ValueError):
        korn.SkewShift(np.eye(3))


# ---------------------------------------------------- dual norms, lemma

def test_dual_norm(cube2, rng):
    H = korn.h1_stiffness(cube2, 9)
    assert korn.dual_norm_hminus1(np.zeros((9, len(H.interior))), H) == 0.0
    f = rng.standard_normal((9, len(H.interior)))
    assert abs(korn.dual_norm_hminus1(2 * f, H) - 2 * korn.dual_norm_hminus1(f, H)) < 1e-12 * korn.dual_norm_hminus1(f, H)


def test_lemma_constant_symmetric(cube2, rng):
    S = sym(rng.standard_normal((3, 3)))
    rep = korn.check_lemma_basic(interpolate(korn.edge_space(cube2), const(S)))
    assert rep.ratio <= 1.0 + 1e-12
    assert rep.terms["skew_dual"] < 1e-12


def test_lemma_nye_field(cube2):
    P = interpolate(korn.edge_space(cube2), lambda x: anti(np.stack([x[:, 2], 0 * x[:, 0], 0 * x[:, 0]], 1)))
    rep = korn.check_lemma_basic(P)
    assert np.isfinite([rep.lhs, rep.ratio, *rep.terms.values()]).all()
    # the lowest-order interpolant of a linear skew field is not exactly skew,
    # so only the terms' signs and finiteness are fixed here
    assert rep.lhs > 0 and rep.terms["curl_dual"] > 0 and rep.ratio < 10


def test_distributional_curl_matches_direct(cube2, rng):
    # for H(curl) fields the distributional pairing equals int <Curl P, Phi>
    P = FieldDofs(korn.edge_space(cube2), rng.standard_normal(3 * cube2.n_edges))
    H = korn.h1_stiffness(cube2, 9)
    from korncurl.quadrature import keast15
    from korncurl.fespace import cell_values
    rule = keast15()
    vals = cell_values(P, rule)
    T = np.einsum("nqak,kdb->nqabd", vals, korn.EPS3).reshape(cube2.n_cells, rule.n_points, 9, 3)
    dist = H.grad_loads(T, rule)
    C = cell_curls(P).reshape(-1, 1, 9) * np.ones((1, rule.n_points, 1))
    direct = H.loads(C, rule)
    assert np.max(np.abs(dist - direct)) < 1e-12 * np.abs(direct).max()


@pytest.mark.parametrize("k", [1, 2])
def test_lemma_and_necas_baselines(k):
    mesh = build_box_mesh(subdivisions=k)
    lemma = korn.lemma_sample(mesh, BASELINES["samples"], BASELINES["seed"])
    necas = korn.necas_sample(mesh, BASELINES["samples"], BASELINES["seed"])
    assert np.all(np.isfinite(lemma)) and np.all(np.isfinite(necas))
    assert lemma.max() == BASELINES[f"lemma_k{k}"]
    assert necas.max() == BASELINES[f"necas_k{k}"]


def test_necas_examples(cube2):
    space = LagrangeSpace(cube2, ncomp=1)
    zero = korn.necas_spot_check(space.zeros())
    assert zero.lhs == 0.0 and zero.rhs == 0.0 and zero.ratio == 0.0
    one = korn.necas_spot_check(FieldDofs(space, np.ones(cube2.n_vertices)))
    assert abs(one.lhs - 1.0) < 1e-12
    assert one.terms["f_dual"] > 0 and np.isfinite(one.ratio)
    with pytest.raises(WrongSpace):
        korn.necas_spot_check(LagrangeSpace(cube2).zeros())


# ------------------------------------------------------- sampled bound

@pytest.mark.parametrize("mode", korn.SAMPLE_MODES)
def test_sampled_inequality(cube2, est2, mode):
    rep = korn.verify_inequality_sample(cube2, "whole-boundary", 2.0, 500, est2.constant, mode=mode)
    assert rep.violations == 0
    assert rep.max_ratio <= est2.constant * (1 + 1e-8)


def test_sampled_inequality_has_teeth(cube2, est2):
    ref = korn.verify_inequality_sample(cube2, "whole-boundary", 2.0, 200, est2.constant)
    rep = korn.verify_inequality_sample(cube2, "whole-boundary", 2.0, 200, 0.5 * np.median(ref.ratios))
    assert rep.violations > 0


def test_sampled_general_p_histogram(cube2):
    rep = korn.verify_inequality_sample(cube2, "whole-boundary", 1.5, 20, 10.0)
    assert rep.violations == 0 and rep.histogram[0].sum() == 20
