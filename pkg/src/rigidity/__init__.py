"""Desk-scale numerical verification of rank-1 rigid differential inclusions.

Subpackages by concern: ``matrix_space`` (subspaces, rank-1 gaps, elliptic
coefficient tensors), ``gauge_integral`` (non-absolutely convergent
integration and the divergence theorem on figures), ``grid`` and ``elliptic``
(lattice fields, mollification, energy ratios, weak residuals, constant
coefficient solves), ``corpus`` (named analytic test fields), ``cli`` (batch
verification suites).
"""

from .matrix_space import (
    EllipticTensor,
    MatrixSubspace,
    Rank1Certificate,
    coefficient_tensor,
    conformal_subspace,
    diagonal_subspace,
    has_rank1_connection,
    legendre_hadamard_constant,
    orthonormalize,
    project,
    rank1_gap,
)
from .gauge_integral import (
    Cell,
    Figure,
    IntegralResult,
    TaggedPartition,
    ThinSet,
    VectorField2D,
    boundary_flux,
    divergence_integral_2d,
    hk_integrate_1d,
    verify_vanishing,
)
from .grid import GridField, difference_quotient, finite_difference_gradient
from .elliptic import (
    Mollifier,
    assemble_and_solve_system,
    caccioppoli_ratio,
    cauchy_riemann_residual,
    inclusion_distance,
    mean_value_check,
    mollify,
    weak_laplace_residual,
)

__version__ = "0.1.0"
