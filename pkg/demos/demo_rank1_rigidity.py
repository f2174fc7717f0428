"""
Rank-1 rigidity of a matrix subspace, end to end
================================================

The plane of conformal 2x2 matrices ((a, -b), (b, a)) contains no nonzero
rank-1 matrix.  This script measures how far rank-1 matrices stay from it,
then assembles the elliptic coefficient tensor that this rigidity induces.
"""

import numpy as np

from rigidity.matrix_space import (
    certificate_to_json,
    coefficient_tensor,
    conformal_subspace,
    diagonal_subspace,
    has_rank1_connection,
    legendre_hadamard_constant,
    project,
    rank1_gap,
)

space = conformal_subspace()
print("subspace: conformal 2x2 matrices, dimension", space.dim)

# orthogonal split of an arbitrary matrix
mat = np.array([[1.0, 0.0], [0.0, 0.0]])
onto = project(space, mat, "L")
perp = project(space, mat, "L_perp")
print("\nsplit of ((1,0),(0,0)):")
print("  conformal part    \n", onto)
print("  anticonformal part\n", perp)
print("  Pythagoras check: |M|^2 =", np.linalg.norm(mat) ** 2,
      "=", np.linalg.norm(onto) ** 2 + np.linalg.norm(perp) ** 2)

# the rank-1 gap: minimum distance of unit rank-1 matrices to the subspace
cert = rank1_gap(space)
print("\nrank-1 gap:", cert.gap, " (closed form 1/sqrt(2) =", 1 / np.sqrt(2), ")")
print("attained at a =", cert.a, ", b =", cert.b)
flag, _ = has_rank1_connection(space, tol=1e-6)
print("has rank-1 connection?", flag)

# a subspace that *does* contain rank-1 matrices, for contrast
diag = diagonal_subspace()
dflag, dcert = has_rank1_connection(diag, tol=1e-6)
print("\ndiagonal 2x2 subspace: has rank-1 connection?", dflag,
      " witness a x b =\n", dcert.matrix.round(12))

# the induced constant-coefficient system and its ellipticity constant
tensor = coefficient_tensor(space)
mu = legendre_hadamard_constant(tensor)
print("\nelliptic tensor: mu =", mu, " vs gap^2 =", cert.gap ** 2)
print("flattened tensor is the projection onto the anticonformal plane:")
print(tensor.flattened().round(12))

print("\ncertificate as JSON:")
print(certificate_to_json(cert))
