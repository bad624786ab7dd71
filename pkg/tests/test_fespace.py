import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from korncurl.errors import MeshMismatch, OutOfRange, WrongSpace
from korncurl.fespace import (AffineMatrixField, EdgeMatrixSpace, FieldDofs, LagrangeSpace,
                              apply_tangential_bc, cell_curls, cell_gradients, cell_values,
                              check_tangential_trace_ibp, constant_skew_fields, eval_curl,
                              eval_field, interpolate, interpolate_gradient)
from korncurl.mesh import boundary_edges, build_box_mesh
from korncurl.quadrature import keast4
from korncurl.tensor3 import anti

CENTRE = np.full(4, 0.25)


def const(A):
    return lambda x: np.broadcast_to(A, (len(x), 3, 3))


def test_dof_counts(cube1):
    assert LagrangeSpace(cube1).dof_count == 24
    space = EdgeMatrixSpace(cube1)
    assert space.dof_count == 57
    bd = space.boundary_dofs("whole-boundary")
    be = boundary_edges(cube1, "whole-boundary")
    assert set(bd) == {r * cube1.n_edges + e for r in range(3) for e in be}


def test_bc_elimination_counts(cube1, cube2):
    space = EdgeMatrixSpace(cube1)
    assert space.constraint("whole-boundary").n_free == 3
    assert len(space.boundary_dofs("face-z0")) == 15
    sp2 = EdgeMatrixSpace(cube2)
    nb = len(boundary_edges(cube2, "whole-boundary"))
    assert sp2.constraint("whole-boundary").n_free == 3 * (cube2.n_edges - nb)


def test_apply_bc_variants(cube1, rng):
    space = EdgeMatrixSpace(cube1)
    P = FieldDofs(space, rng.standard_normal(57))
    Pc = apply_tangential_bc(P, "whole-boundary")
    assert np.count_nonzero(Pc.values) == 3
    A = np.eye(57)
    Ar, con = apply_tangential_bc(A, "face-z0", space)
    assert Ar.shape == (42, 42)
    vr, _ = apply_tangential_bc(np.ones(57), "face-z0", space)
    assert vr.shape == (42,)
    with pytest.raises(TypeError):
        apply_tangential_bc(np.ones(57), "all")


def test_zero_field(cube2):
    space = EdgeMatrixSpace(cube2)
    assert np.array_equal(eval_field(space.zeros(), 3, CENTRE), np.zeros((3, 3)))
    assert np.array_equal(interpolate(space, const(np.zeros((3, 3)))).values, np.zeros(space.dof_count))


def test_constants_reproduced(cube2, rng):
    space = EdgeMatrixSpace(cube2)
    A = anti(np.eye(3)[2])
    PA = interpolate(space, const(A))
    for c in range(cube2.n_cells):
        assert np.max(np.abs(eval_field(PA, c, CENTRE) - A)) < 1e-12
    M = rng.standard_normal((3, 3))
    vals = cell_values(interpolate(space, const(M)))
    assert np.max(np.abs(vals - M)) < 1e-12
    assert np.max(np.abs(cell_curls(interpolate(space, const(M))))) < 1e-12


def test_affine_rows_reproduced(cube2, rng):
    # rows a_r + b_r x x span the lowest-order edge space on each cell
    a, b = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    f = lambda x: a[None] + np.cross(b[None], x[:, None, :])
    P = interpolate(EdgeMatrixSpace(cube2), f)
    rule = keast4()
    from korncurl.fespace import physical_points
    xq = physical_points(cube2, rule.points)
    exact = f(xq.reshape(-1, 3)).reshape(cube2.n_cells, rule.n_points, 3, 3)
    assert np.max(np.abs(cell_values(P, rule) - exact)) < 1e-12
    # Curl of row a + b x x is 2b
    assert np.max(np.abs(cell_curls(P) - 2 * b)) < 1e-12


def test_nye_example_curl(cube2):
    space = EdgeMatrixSpace(cube2)
    P = interpolate(space, lambda x: anti(np.stack([x[:, 2], 0 * x[:, 0], 0 * x[:, 0]], axis=1)))
    expected = np.zeros((3, 3))
    expected[2, 0] = -1.0
    for c in (0, 17, 47):
        assert np.max(np.abs(eval_curl(P, c) - expected)) < 1e-12


def test_interpolate_is_projection(cube2, rng):
    space = EdgeMatrixSpace(cube2)
    P = FieldDofs(space, rng.standard_normal(space.dof_count))
    assert np.max(np.abs(interpolate(space, P).values - P.values)) < 1e-12


def test_interpolate_gradient_examples(cube2, rng):
    u_space = LagrangeSpace(cube2)
    const_u = interpolate(u_space, lambda x: np.broadcast_to([1.0, -2.0, 3.0], (len(x), 3)))
    assert np.array_equal(interpolate_gradient(const_u).values, np.zeros(3 * cube2.n_edges))
    B = rng.standard_normal((3, 3))
    u = interpolate(u_space, lambda x: x @ B.T)
    P = interpolate_gradient(u)
    assert np.max(np.abs(cell_values(P) - B)) < 1e-12
    assert np.max(np.abs(cell_gradients(u) - B)) < 1e-12


def test_curl_of_gradient_operator_is_zero(cube2):
    # assemble Curl o interpolate_gradient column by column: the exact zero matrix
    u_space = LagrangeSpace(cube2)
    cols = [cell_curls(interpolate_gradient(FieldDofs(u_space, e))).ravel()
            for e in np.eye(u_space.dof_count)]
    assert np.max(np.abs(np.array(cols))) < 1e-13


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2, 3]))
def test_discrete_complex(seed, k):
    mesh = build_box_mesh(subdivisions=k)
    u = FieldDofs(LagrangeSpace(mesh), np.random.default_rng(seed).standard_normal(3 * mesh.n_vertices))
    P = interpolate_gradient(u)
    scale = np.abs(cell_gradients(u)).max()
    assert np.abs(cell_curls(P)).max() <= 1e-13 * scale


def test_skew_constants_do_not_survive_bc(cube2):
    space = EdgeMatrixSpace(cube2)
    Z = constant_skew_fields(space)
    con = space.constraint("whole-boundary")
    # projecting removes all boundary DOFs; no nonzero combination stays intact
    kept = np.linalg.norm(Z[:, con.free], axis=1) / np.linalg.norm(Z, axis=1)
    assert np.all(kept < 1.0)
    assert np.linalg.matrix_rank(np.delete(Z, con.free, axis=1)) == 3


def test_eval_errors(cube1, rng):
    space = EdgeMatrixSpace(cube1)
    with pytest.raises(OutOfRange):
        eval_field(space.zeros(), 6, CENTRE)
    with pytest.raises(WrongSpace):
        eval_curl(LagrangeSpace(cube1).zeros(), 0)
    other = EdgeMatrixSpace(build_box_mesh(subdivisions=1))
    with pytest.raises(MeshMismatch):
        space.zeros() + other.zeros()
    u = FieldDofs(LagrangeSpace(cube1), rng.standard_normal(24))
    assert eval_field(u, 0, CENTRE).shape == (3,)


def test_ibp_examples(cube2, rng):
    space = EdgeMatrixSpace(cube2)
    Q = AffineMatrixField.random(rng)
    assert check_tangential_trace_ibp(space.zeros(), Q)[0] == 0.0
    for _ in range(5):
        P = apply_tangential_bc(FieldDofs(space, rng.standard_normal(space.dof_count)), "all")
        res, scale = check_tangential_trace_ibp(P, AffineMatrixField(rng.standard_normal((3, 3)), np.zeros((3, 3, 3))))
        assert res < 1e-11 * scale
        res, scale = check_tangential_trace_ibp(P, AffineMatrixField.random(rng))
        assert res < 1e-11 * scale
    # without BC the boundary term is generically nonzero
    P = FieldDofs(space, rng.standard_normal(space.dof_count))
    res, scale = check_tangential_trace_ibp(P, AffineMatrixField.random(rng))
    assert res > 1e-6 * scale


def test_affine_field_curl_matches_interpolant(cube2, rng):
    Q = AffineMatrixField.random(rng)
    P = interpolate(EdgeMatrixSpace(cube2), Q)
    assert np.max(np.abs(cell_curls(P) - Q.curl())) < 1e-12
