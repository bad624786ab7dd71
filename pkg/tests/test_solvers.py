import numpy as np
import pytest

from korncurl import solvers
from korncurl.errors import EmptyRegion, InvalidP, UnknownRegion
from korncurl.fespace import FieldDofs, interpolate
from korncurl.korn import edge_space, korn_matrices
from korncurl.linalg import cg_solve
from korncurl.tensor3 import anti


def smooth_load(x):
    v = np.stack([np.sin(np.pi * x[:, 1]), x[:, 2] * x[:, 0], np.cos(x[:, 0])], axis=1)
    return np.einsum("ni,j->nij", v, np.array([1.0, 0.5, -0.25])) + np.eye(3)


def manufactured(mesh):
    space = edge_space(mesh)
    P = interpolate(space, lambda x: anti(np.stack([x[:, 2], 0 * x[:, 0], 0 * x[:, 0]], 1)))
    con = space.constraint("whole-boundary")
    return FieldDofs(space, con.extend(con.restrict(P.values)))


@pytest.mark.parametrize("variant", solvers.VARIANTS)
def test_zero_load(cube2, variant):
    P, rep = solvers.solve_pcurlcurl(cube2, 0.0, 1.5, variant)
    assert np.abs(P.values).max() == 0.0 and rep.energy == 0.0


def test_p2_matches_linear_solve(cube2):
    P, rep = solvers.solve_pcurlcurl(cube2, smooth_load, 2.0)
    space = edge_space(cube2)
    M, _, C = korn_matrices(space)
    con = space.constraint("whole-boundary")
    b = con.restrict(solvers.pcurlcurl_load(space, smooth_load))
    x, _ = cg_solve(con.restrict_matrix(M + C), b, tol=1e-14)
    assert rep.iterations == 1
    assert np.abs(con.restrict(P.values) - x).max() < 1e-9 * max(1.0, np.abs(x).max())


@pytest.mark.parametrize("p", [2.0, 1.5])
@pytest.mark.parametrize("variant", solvers.VARIANTS)
def test_manufactured_solution(cube2, p, variant):
    Pstar = manufactured(cube2)
    F = solvers.pcurlcurl_operator(cube2, Pstar, p, variant)
    P, rep = solvers.solve_pcurlcurl(cube2, F, p, variant)
    assert np.abs(P.values - Pstar.values).max() < 1e-8
    assert rep.converged and rep.is_monotone()


def test_p15_continuation(cube2):
    P, rep = solvers.solve_pcurlcurl(cube2, smooth_load, 1.5)
    assert rep.is_monotone()
    assert rep.extra["eps_sensitivity"] < 1e-6
    assert len(rep.energy_history) == len(solvers.EPS_PATH)
    assert rep.residual <= 1e-10 * (1 + np.linalg.norm(solvers.pcurlcurl_load(edge_space(cube2), smooth_load)))


def test_sym_variant_records_coercivity(cube2):
    _, rep = solvers.solve_pcurlcurl(cube2, smooth_load, 1.5, "sym-P")
    assert rep.extra["coercivity"] > 1e-6 and rep.is_monotone()


@pytest.mark.parametrize("p", [1.0, 0.5, 2.5])
def test_invalid_p(cube1, p):
    with pytest.raises(InvalidP):
        solvers.solve_pcurlcurl(cube1, 0.0, p)


def test_micromorphic_zero_force(cube2):
    u, P, rep = solvers.solve_micromorphic(cube2, None)
    assert np.abs(u.values).max() < 1e-12 and np.abs(P.values).max() < 1e-12
    u, P, _ = solvers.solve_plasticity_static(cube2, np.zeros(3))
    assert np.abs(u.values).max() < 1e-12 and np.abs(P.values).max() < 1e-12


def test_micromorphic_constant_force(cube1, cube2):
    e3 = np.array([0.0, 0.0, 1.0])
    _, _, r1 = solvers.solve_micromorphic(cube1, e3)
    u, P, r2 = solvers.solve_micromorphic(cube2, e3)
    assert r2.energy < 0
    assert r2.extra["residual_u"] < 1e-9 and r2.extra["residual_P"] < 1e-9
    assert r2.energy <= r1.energy + 1e-12
    up, Pp, rp = solvers.solve_plasticity_static(cube2, e3)
    assert np.abs(up.values - u.values).max() < 1e-12
    assert np.abs(Pp.values - P.values).max() < 1e-12
    assert rp.extra["model"] == "plasticity" and rp.extra["shared_kernel"]


def test_micromorphic_partial_boundary(cube2):
    u, P, rep = solvers.solve_micromorphic(cube2, lambda x: np.stack([x[:, 1], 0 * x[:, 0], 1 + 0 * x[:, 0]], 1),
                                           gamma_D="face-z0")
    assert rep.converged and rep.energy < 0


def test_block_coercivity(cube1):
    assert solvers.block_coercivity(cube1) > 0


def test_region_errors(cube1):
    from korncurl.mesh import FACE_REGIONS, _from_cells
    with pytest.raises(UnknownRegion):
        solvers.solve_micromorphic(cube1, None, gamma_D="nowhere")
    one = _from_cells(cube1.vertices.copy(), cube1.cells[:1].copy(), "tet")
    missing = [r for r in FACE_REGIONS if not np.any(one.boundary_labels == FACE_REGIONS.index(r))]
    with pytest.raises(EmptyRegion):
        solvers.solve_micromorphic(one, None, gamma_D=missing[0])
