"""Matrix subspaces, rank-1 gaps and the induced elliptic coefficient tensor.

A subspace L of m-by-n real matrices is "rank-1 rigid" when it contains no
nonzero rank-1 matrix.  Because L is linear, two elements differing by a
rank-1 matrix exist exactly when L itself contains a nonzero rank-1 element,
so rigidity of the whole subspace reduces to a minimisation over unit
vectors a, b of the distance from a (x) b to L.  The minimum value (the
rank-1 gap) is the square root of the best constant in the strong
ellipticity inequality of the constant-coefficient system induced by the
orthogonal projection onto the complement of L.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .jsonutil import dump_json

__all__ = [
    "MatrixSubspace",
    "Rank1Certificate",
    "EllipticTensor",
    "orthonormalize",
    "project",
    "rank1_gap",
    "has_rank1_connection",
    "coefficient_tensor",
    "legendre_hadamard_constant",
    "conformal_subspace",
    "diagonal_subspace",
    "random_subspace",
    "subspace_from_json",
    "subspace_to_json",
    "certificate_to_json",
    "tensor_to_json",
]

GRAM_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MatrixSubspace:
    """A linear subspace of m-by-n matrices with a Frobenius-orthonormal basis.

    ``basis`` has shape (k, m, n); the k basis matrices are pairwise
    orthonormal in the Frobenius inner product.  Use :func:`orthonormalize`
    to build one from raw spanning matrices.
    """

    m: int
    n: int
    basis: np.ndarray

    def __post_init__(self):
        basis = _frozen(self.basis).reshape(-1, self.m, self.n)
        object.__setattr__(self, "basis", basis)
        k = basis.shape[0]
        if k:
            flat = basis.reshape(k, -1)
            gram = flat @ flat.T
            if not np.allclose(gram, np.eye(k), atol=GRAM_TOL):
                raise ValueError("basis is not orthonormal to 1e-12")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def flat_basis(self) -> np.ndarray:
        """Basis flattened row-major to shape (k, m*n)."""
        return self.basis.reshape(self.dim, self.m * self.n)

    def projector(self, onto: str = "L") -> np.ndarray:
        """The (mn)-by-(mn) matrix of the orthogonal projection onto L or L_perp."""
        b = self.flat_basis
        p = b.T @ b
        if onto == "L":
            return p
        if onto == "L_perp":
            return np.eye(self.m * self.n) - p
        raise ValueError("onto must be 'L' or 'L_perp'")


@dataclass(frozen=True)
class Rank1Certificate:
    """Unit vectors a, b realising the (approximate) minimum of |P_perp(a x b)|."""

    a: np.ndarray
    b: np.ndarray
    gap: float

    def __post_init__(self):
        object.__setattr__(self, "a", _frozen(self.a))
        object.__setattr__(self, "b", _frozen(self.b))
        for v in (self.a, self.b):
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ValueError("certificate vectors must be unit length")
        if self.gap < 0:
            raise ValueError("gap must be nonnegative")

    @property
    def matrix(self) -> np.ndarray:
        """The rank-1 matrix a x b."""
        return np.outer(self.a, self.b)


@dataclass(frozen=True)
class EllipticTensor:
    """Coefficients T[i, alpha, j, beta] of the induced constant-coefficient system.

    The entry T[i, alpha, j, beta] is the (i, alpha) entry of the projection
    of the (j, beta) unit matrix onto the orthogonal complement of the
    subspace.  Flattened over the index pairs (i, alpha) and (j, beta) the
    tensor is therefore the matrix of an orthogonal projection: symmetric and
    idempotent.  ``mu`` is the ellipticity constant, the minimum of the
    associated quadratic form over rank-1 directions.
    """

    m: int
    n: int
    coeffs: np.ndarray
    mu: float

    def __post_init__(self):
        coeffs = _frozen(self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if coeffs.shape != (self.m, self.n, self.m, self.n):
            raise ValueError("coeffs must have shape (m, n, m, n)")
        p = self.flattened()
        if not np.allclose(p, p.T, atol=1e-10) or not np.allclose(p @ p, p, atol=1e-10):
            raise ValueError("flattened tensor is not an orthogonal projection")
        if self.mu < -1e-12:
            raise ValueError("mu must be nonnegative")

    def flattened(self) -> np.ndarray:
        """The (mn)-by-(mn) matrix with row (i*n + alpha), column (j*n + beta)."""
        mn = self.m * self.n
        return self.coeffs.reshape(mn, mn)

    def quadratic_form(self, a, b) -> float:
        """Sum over all indices of a_i b_alpha T[i,alpha,j,beta] a_j b_beta."""
        return float(np.einsum("iajb,i,a,j,b->", self.coeffs, a, b, a, b,
                               optimize=True))


def orthonormalize(raw_basis, shape=None) -> MatrixSubspace:
    """Build a subspace from spanning matrices via SVD orthonormalisation.

    Linearly dependent inputs reduce the dimension.  An empty list yields the
    zero subspace, in which case ``shape=(m, n)`` must be supplied.
    """
    mats = [np.asarray(mat, dtype=float) for mat in raw_basis]
    if not mats:
        if shape is None:
            raise ValueError("shape=(m, n) is required for an empty basis")
        m, n = shape
        if m < 1 or n < 1:
            raise ValueError("matrix dimensions must be positive")
        return MatrixSubspace(m, n, np.empty((0, m, n)))
    m, n = mats[0].shape if mats[0].ndim == 2 else (0, 0)
    if m < 1 or n < 1:
        raise ValueError("basis matrices must be 2-d with positive shape")
    for mat in mats:
        if mat.shape != (m, n):
            raise ValueError(f"inconsistent matrix shapes: {mat.shape} vs {(m, n)}")
    if shape is not None and tuple(shape) != (m, n):
        raise ValueError("explicit shape disagrees with basis matrices")
    stacked = np.stack([mat.reshape(-1) for mat in mats])
    u, s, vt = np.linalg.svd(stacked, full_matrices=False)
    if s.size:
        rank = int(np.sum(s > max(stacked.shape) * np.finfo(float).eps * s[0]))
    else:
        rank = 0
    basis = vt[:rank]
    # fix signs so the basis is reproducible across BLAS implementations
    for row in basis:
        lead = row[np.argmax(np.abs(row))]
        if lead < 0:
            row *= -1.0
    return MatrixSubspace(m, n, basis.reshape(rank, m, n))


def project(space: MatrixSubspace, mat, onto: str = "L") -> np.ndarray:
    """Project a matrix onto the subspace (``onto='L'``) or its complement.

    The two projections sum to the input matrix.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.shape != (space.m, space.n):
        raise ValueError(f"matrix shape {mat.shape} does not match ({space.m}, {space.n})")
    coeff = space.flat_basis @ mat.reshape(-1)
    onto_l = (space.flat_basis.T @ coeff).reshape(space.m, space.n)
    if onto == "L":
        return onto_l
    if onto == "L_perp":
        return mat - onto_l
    raise ValueError("onto must be 'L' or 'L_perp'")


def _sphere_grid(dim: int, grid_points: int, rng: np.random.Generator) -> np.ndarray:
    """Deterministic unit-vector grid: angular for dim <= 3, seeded samples above."""
    if dim == 1:
        return np.array([[1.0]])
    if dim == 2:
        theta = np.linspace(0.0, 2.0 * np.pi, grid_points, endpoint=False)
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if dim == 3:
        theta = np.linspace(0.0, np.pi, grid_points)
        phi = np.linspace(0.0, 2.0 * np.pi, grid_points, endpoint=False)
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        pts = np.column_stack([
            (np.sin(tt) * np.cos(pp)).ravel(),
            (np.sin(tt) * np.sin(pp)).ravel(),
            np.cos(tt).ravel(),
        ])
        return pts
    samples = rng.standard_normal((max(grid_points ** 2, 1024), dim))
    norms = np.linalg.norm(samples, axis=1)
    good = norms > 1e-12
    return samples[good] / norms[good, None]


def _contract_b(tensor: np.ndarray, a: np.ndarray) -> np.ndarray:
    """n-by-n form Q(a) with Q[alpha, beta] = sum_ij a_i a_j T[i,alpha,j,beta]."""
    return np.einsum("iajb,i,j->ab", tensor, a, a, optimize=True)


def _contract_a(tensor: np.ndarray, b: np.ndarray) -> np.ndarray:
    """m-by-m form R(b) with R[i, j] = sum_ab b_alpha b_beta T[i,alpha,j,beta]."""
    return np.einsum("iajb,a,b->ij", tensor, b, b, optimize=True)


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    lead = v[np.argmax(np.abs(v))]
    return -v if lead < 0 else v


def _min_rank1_form(tensor, m, n, grid_points, rel_tol, max_iter, n_seeds, seed):
    """Minimise the quartic form q(a, b) over the product of unit spheres.

    Coarse grid over the a-sphere with exact minimisation in b (smallest
    eigenvector of Q(a)), then alternating eigenvector refinement from the
    best seeds.  The alternating steps are exactly solvable, so each strictly
    decreases q; ties are broken by grid order for run-to-run determinism.
    """
    rng = np.random.default_rng(seed)
    grid = _sphere_grid(m, grid_points, rng)
    q_of_a = np.einsum("iajb,si,sj->sab", tensor, grid, grid, optimize=True)
    q_of_a = 0.5 * (q_of_a + np.swapaxes(q_of_a, 1, 2))
    vals, vecs = np.linalg.eigh(q_of_a)
    seed_vals = vals[:, 0]
    order = np.argsort(seed_vals, kind="stable")[: max(1, n_seeds)]

    best = None
    for idx in order:
        a = grid[idx].copy()
        b = vecs[idx, :, 0].copy()
        val = float(seed_vals[idx])
        for _ in range(max_iter):
            r = _contract_a(tensor, b)
            w, v = np.linalg.eigh(0.5 * (r + r.T))
            a = v[:, 0]
            q = _contract_b(tensor, a)
            w, v = np.linalg.eigh(0.5 * (q + q.T))
            b = v[:, 0]
            new_val = float(w[0])
            if abs(val - new_val) <= rel_tol * max(1.0, abs(new_val)):
                val = new_val
                break
            val = new_val
        if best is None or val < best[0]:
            best = (val, a, b)
    val, a, b = best
    return max(val, 0.0), _canonical_sign(a), _canonical_sign(b)


def rank1_gap(space: MatrixSubspace, grid_points=64, rel_tol=1e-9,
              max_iter=500, n_seeds=8, seed=0) -> Rank1Certificate:
    """Minimum of |P_perp(a x b)| over unit vectors a, b.

    Positive exactly when the subspace has no rank-1 connection.  The full
    space returns gap 0 with an arbitrary certificate; the zero subspace
    returns gap 1 since the projection is then the identity.
    """
    if space.m < 1 or space.n < 1:
        raise ValueError("matrix dimensions must be positive")
    tensor = space.projector("L_perp").reshape(space.m, space.n, space.m, space.n)
    val, a, b = _min_rank1_form(tensor, space.m, space.n, grid_points,
                                rel_tol, max_iter, n_seeds, seed)
    return Rank1Certificate(a=a, b=b, gap=float(np.sqrt(val)))


def has_rank1_connection(space: MatrixSubspace, tol: float = 1e-6, **opts):
    """Whether the subspace contains two elements differing by a rank-1 matrix.

    Since L is a subspace, A - B runs over L itself, so a rank-1 connection
    exists exactly when L contains a nonzero rank-1 matrix, i.e. when the
    rank-1 gap vanishes.  Returns ``(flag, certificate)``.  The gap is the
    square root of an eigenvalue minimum, so values below ~1e-8 are noise;
    tolerances tighter than that are not meaningful in double precision.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    cert = rank1_gap(space, **opts)
    return bool(cert.gap < tol), cert


def coefficient_tensor(space: MatrixSubspace, **opts) -> EllipticTensor:
    """Assemble T[i, alpha, j, beta] = (i, alpha) entry of P_perp(unit matrix (j, beta)).

    Equivalently the flattened tensor is the (mn)-by-(mn) projection matrix
    onto the complement of the subspace.  ``mu`` is filled in with the
    Legendre-Hadamard constant of the assembled coefficients.
    """
    mn = space.m * space.n
    cols = np.empty((mn, mn))
    eye = np.eye(space.m * space.n)
    for j in range(space.m):
        for beta in range(space.n):
            unit = eye[j * space.n + beta].reshape(space.m, space.n)
            cols[:, j * space.n + beta] = project(space, unit, "L_perp").reshape(-1)
    coeffs = cols.reshape(space.m, space.n, space.m, space.n)
    mu = _legendre_hadamard_from_coeffs(coeffs, space.m, space.n, **opts)
    return EllipticTensor(space.m, space.n, coeffs, mu)


def _legendre_hadamard_from_coeffs(coeffs, m, n, grid_points=64, rel_tol=1e-9,
                                   max_iter=500, n_seeds=8, seed=0):
    val, _, _ = _min_rank1_form(coeffs, m, n, grid_points, rel_tol, max_iter,
                                n_seeds, seed)
    return float(val)


def legendre_hadamard_constant(tensor: EllipticTensor, **opts) -> float:
    """Minimum of the quadratic form over unit rank-1 directions a x b.

    Agrees with the squared rank-1 gap of the generating subspace up to the
    combined optimizer tolerance.
    """
    return _legendre_hadamard_from_coeffs(tensor.coeffs, tensor.m, tensor.n, **opts)


# ---------------------------------------------------------------------------
# stock subspaces

def conformal_subspace() -> MatrixSubspace:
    """Planar conformal matrices ((a, -b), (b, a)); the classical rigid example."""
    return orthonormalize([
        np.array([[1.0, 0.0], [0.0, 1.0]]),
        np.array([[0.0, -1.0], [1.0, 0.0]]),
    ])


def diagonal_subspace(size: int = 2) -> MatrixSubspace:
    """Diagonal size-by-size matrices; contains rank-1 elements (any e_i x e_i)."""
    mats = []
    for i in range(size):
        mat = np.zeros((size, size))
        mat[i, i] = 1.0
        mats.append(mat)
    return orthonormalize(mats)


def random_subspace(m, n, k, seed) -> MatrixSubspace:
    """Seeded Gaussian subspace of dimension k (after removing dependencies)."""
    rng = np.random.default_rng(seed)
    return orthonormalize(list(rng.standard_normal((k, m, n))))


# ---------------------------------------------------------------------------
# JSON interfaces: {"m": int, "n": int, "basis": [[row-major floats]]}

def subspace_to_json(space: MatrixSubspace) -> str:
    return dump_json({
        "m": space.m,
        "n": space.n,
        "basis": [list(row) for row in space.flat_basis],
    })


def subspace_from_json(text) -> MatrixSubspace:
    """Parse a subspace from a JSON string or an already-decoded dict."""
    obj = json.loads(text) if isinstance(text, str) else text
    m, n = int(obj["m"]), int(obj["n"])
    mats = [np.asarray(row, dtype=float).reshape(m, n) for row in obj["basis"]]
    return orthonormalize(mats, shape=(m, n))


def certificate_to_json(cert: Rank1Certificate) -> str:
    return dump_json({"a": list(cert.a), "b": list(cert.b), "gap": cert.gap})


def tensor_to_json(tensor: EllipticTensor) -> str:
    return dump_json({
        "m": tensor.m,
        "n": tensor.n,
        "mu": tensor.mu,
        "coeffs": tensor.coeffs.tolist(),
    })
