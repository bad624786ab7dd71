"""
What Korn's inequality cannot see
=================================

Without a boundary condition the quadratic form ||sym P||^2 + ||Curl P||^2
vanishes on the constant skew-symmetric fields, so no Korn constant exists.
We look at that kernel on the coarsest cube meshes.
"""

import numpy as np

from korncurl import korn, build_box_mesh
from korncurl.fespace import constant_skew_fields

for k in (1, 2):
    mesh = build_box_mesh(subdivisions=k)
    est = korn.korn_constant_p2(mesh, region=None)
    print(f"k={k}: {korn.edge_space(mesh).dof_count} dofs")
    print("  smallest eigenvalues", np.array2string(est.eigenvalues[:5], precision=3))
    print("  kernel dimension    ", est.kernel_dim)
    print("  distance to span{anti(e_i)}", f"{est.diagnostics['kernel_projection_error']:.1e}")

# The three zero modes are exactly the interpolants of anti(e_1), anti(e_2),
# anti(e_3): their sym part vanishes and so does their Curl.
space = korn.edge_space(build_box_mesh(subdivisions=2))
M, S, C = korn.korn_matrices(space)
K = constant_skew_fields(space)
print("max |(S + C) anti(e_i)| =", np.abs((S + C) @ K.T).max())

# Pinning the tangential trace on the boundary removes them, and the
# smallest eigenvalue turns positive.
est = korn.korn_constant_p2(build_box_mesh(subdivisions=2), "whole-boundary")
print(f"with P x n = 0: lambda_min = {est.lambda_min:.6f}, c = {est.constant:.6f}")
