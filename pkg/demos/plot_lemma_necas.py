"""
Negative-norm estimates
=======================

Two ingredients of the Korn inequality, sampled at p = 2 with H^-1 norms
computed by a Riesz map:

    ||skew P||_{H^-1} <= C (||sym P|| + ||Curl P||_{H^-1})
    ||f||             <= C (||f||_{H^-1} + ||grad f||_{H^-1})

The second is the Necas estimate for mean-free f.
"""

import numpy as np

from korncurl import korn, build_box_mesh

for k in (1, 2, 3):
    mesh = build_box_mesh(subdivisions=k)
    lemma = korn.lemma_sample(mesh, 100, seed=0)
    necas = korn.necas_sample(mesh, 100, seed=0)
    print(f"k={k}: lemma ratios  median {np.median(lemma):.4f} max {lemma.max():.4f}"
          f" | necas ratios median {np.median(necas):.4f} max {necas.max():.4f}")

# Ratios on coarse meshes are large for the Necas check because the H^-1
# norms are computed with few interior test functions; they drop as the
# auxiliary space grows.

# A single field, term by term.
mesh = build_box_mesh(subdivisions=2)
rep = korn.check_lemma_basic(korn.random_edge_field(korn.edge_space(mesh), np.random.default_rng(0)))
print("lhs", f"{rep.lhs:.4f}", {k: round(v, 4) for k, v in rep.terms.items()}, "ratio", f"{rep.ratio:.4f}")
