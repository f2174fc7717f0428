"""Discrete regularity checks: mollification, Caccioppoli ratios, weak residuals.

These operations probe, at finite grid resolution, the chain that upgrades a
pointwise gradient constraint to smoothness: convolution against a compactly
supported radial kernel preserves membership of the gradient in a linear
subspace of matrices; fields whose gradient lies in such a subspace satisfy a
constant-coefficient second-order system in the weak sense; interior gradient
energy is controlled by the field's squared mean; and weakly harmonic
components reproduce their circle averages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d, fftconvolve
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import spsolve

from .grid import GridField, finite_difference_gradient
from .matrix_space import EllipticTensor, MatrixSubspace

__all__ = [
    "Mollifier",
    "WeakResidualReport",
    "UnderResolvedKernelError",
    "UndefinedRatioError",
    "NotEllipticError",
    "mollify",
    "inclusion_distance",
    "caccioppoli_ratio",
    "weak_laplace_residual",
    "cauchy_riemann_residual",
    "mean_value_check",
    "assemble_and_solve_system",
    "system_residual",
    "spectral_profile",
    "bilinear_sample",
]


class UnderResolvedKernelError(ValueError):
    """Mollifier radius too small for the grid spacing."""


class UndefinedRatioError(ValueError):
    """Caccioppoli ratio of an identically vanishing field."""


class NotEllipticError(ValueError):
    """Coefficient tensor lacks a positive ellipticity constant."""


def _default_profile(t):
    t = np.asarray(t, dtype=float)
    inside = t < 1.0
    u = np.where(inside, 1.0 - t * t, 1.0)
    return np.where(inside, np.exp(-1.0 / u), 0.0)


@dataclass(frozen=True)
class Mollifier:
    """Radial kernel of radius epsilon with unit discrete mass.

    ``profile`` maps the scaled radius t = r/epsilon to an unnormalized
    kernel value; it must vanish for t >= 1.  The default is the standard
    smooth bump exp(-1/(1-t^2)).
    """

    epsilon: float
    profile: object = _default_profile

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def stencil(self, h: float) -> np.ndarray:
        """Discrete kernel on the lattice, normalized to mass exactly 1."""
        if self.epsilon < 2.0 * h:
            raise UnderResolvedKernelError(
                f"epsilon={self.epsilon} is below 2h={2 * h}; kernel unresolved")
        reach = int(np.floor(self.epsilon / h + 1e-12))
        offsets = np.arange(-reach, reach + 1)
        di, dj = np.meshgrid(offsets, offsets, indexing="ij")
        r = h * np.hypot(di, dj)
        kernel = np.asarray(self.profile(r / self.epsilon), dtype=float)
        mass = kernel.sum()
        if mass <= 0:
            raise ValueError("profile has nonpositive mass on the stencil")
        kernel = kernel / mass
        if abs(kernel.sum() - 1.0) > 1e-12:
            raise AssertionError("stencil mass deviates from 1")
        if not (np.allclose(kernel, kernel.T, atol=1e-15)
                and np.allclose(kernel, kernel[::-1, :], atol=1e-15)
                and np.allclose(kernel, kernel[:, ::-1], atol=1e-15)):
            raise AssertionError("stencil is not radially symmetric")
        return kernel


def mollify(u: GridField, rho: Mollifier) -> GridField:
    """Convolve against the kernel; the output lives on the eroded interior.

    Erosion is grid-aligned (max-norm): the result drops floor(epsilon/h)
    rings so every output point sees the full stencil.
    """
    kernel = rho.stencil(u.h)
    reach = (kernel.shape[0] - 1) // 2
    nx, ny = u.shape
    if nx - 2 * reach < 3 or ny - 2 * reach < 3:
        raise UnderResolvedKernelError("eroded domain is empty or degenerate")
    out = np.empty((nx - 2 * reach, ny - 2 * reach, u.components))
    # direct summation for small stencils, FFT for wide ones (same result
    # to round-off; the FFT path keeps wide kernels affordable)
    conv = convolve2d if kernel.shape[0] <= 25 else fftconvolve
    for c in range(u.components):
        out[:, :, c] = conv(u.component(c), kernel, mode="valid")
    return GridField(origin=u.origin + reach * u.h, h=u.h, values=out)


def inclusion_distance(du: GridField, space: MatrixSubspace) -> float:
    """Max over grid points of the Frobenius distance from Du(x) to the subspace."""
    mn = space.m * space.n
    if du.components != mn:
        raise ValueError(f"gradient field has {du.components} components, "
                         f"subspace needs {mn}")
    vecs = du.values.reshape(-1, mn)
    resid = vecs @ space.projector("L_perp")
    return float(np.max(np.linalg.norm(resid, axis=1), initial=0.0))


def _trapezoid_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def caccioppoli_ratio(v: GridField, inner_margin: float) -> float:
    """(gradient energy over the inner box U) / (squared mass over the full grid).

    U consists of the lattice points at distance at least ``inner_margin``
    from the boundary of the sampled rectangle.  Both integrals use composite
    trapezoidal weights on their own boxes.
    """
    (x0, x1), (y0, y1) = v.extent
    if inner_margin <= 0:
        raise ValueError("inner_margin must be positive")
    eps = 1e-12 * max(v.h, 1.0)
    xs, ys = v.axis_coords(0), v.axis_coords(1)
    ix = np.where((xs >= x0 + inner_margin - eps) & (xs <= x1 - inner_margin + eps))[0]
    iy = np.where((ys >= y0 + inner_margin - eps) & (ys <= y1 - inner_margin + eps))[0]
    if ix.size < 2 or iy.size < 2:
        raise ValueError("inner margin leaves an empty (or degenerate) inner box")

    w_full = np.outer(_trapezoid_weights(v.shape[0]), _trapezoid_weights(v.shape[1]))
    denom = float(np.sum(w_full * np.sum(v.values**2, axis=2))) * v.h**2
    if denom == 0.0:
        raise UndefinedRatioError("field vanishes identically")

    dv = finite_difference_gradient(v)
    energy = np.sum(dv.values**2, axis=2)[np.ix_(ix, iy)]
    w_inner = np.outer(_trapezoid_weights(ix.size), _trapezoid_weights(iy.size))
    numer = float(np.sum(w_inner * energy)) * v.h**2
    return numer / denom


@dataclass(frozen=True)
class WeakResidualReport:
    residuals: tuple
    max_abs: float
    grid_h: float


def weak_laplace_residual(u: GridField, tests) -> WeakResidualReport:
    """Lattice pairing h^2 * sum of (analytic Laplacian of each test) * u.

    Vanishes (to quadrature accuracy) exactly when u is weakly harmonic
    against the supplied compactly supported tests, whose supports must lie
    strictly inside the sampled rectangle.
    """
    if u.components != 1:
        raise ValueError("weak_laplace_residual expects a scalar field")
    (x0, x1), (y0, y1) = u.extent
    gx, gy = u.meshgrid()
    vals = u.component(0)
    residuals = []
    for idx, bump in enumerate(tests):
        center = np.asarray(bump.center, dtype=float)
        radius = np.asarray(bump.radius, dtype=float)
        if not (np.all(center - radius > (x0, y0)) and np.all(center + radius < (x1, y1))):
            raise ValueError(f"test {idx}: support touches the grid boundary")
        pairing = float(np.sum(bump.laplacian(gx, gy) * vals)) * u.h**2
        label = f"bump{idx}@({center[0]:g},{center[1]:g}),r={np.max(radius):g}"
        residuals.append((label, pairing))
    max_abs = max((abs(val) for _, val in residuals), default=0.0)
    return WeakResidualReport(residuals=tuple(residuals), max_abs=max_abs,
                              grid_h=u.h)


def cauchy_riemann_residual(u: GridField, v: GridField) -> float:
    """Max over interior points of |u_x - v_y| + |u_y + v_x| (centered differences)."""
    if u.components != 1 or v.components != 1:
        raise ValueError("expects scalar fields")
    if u.shape != v.shape or u.h != v.h or not np.allclose(u.origin, v.origin):
        raise ValueError("fields live on different grids")
    a, b = u.component(0), v.component(0)
    two_h = 2.0 * u.h
    u_x = (a[2:, 1:-1] - a[:-2, 1:-1]) / two_h
    u_y = (a[1:-1, 2:] - a[1:-1, :-2]) / two_h
    v_x = (b[2:, 1:-1] - b[:-2, 1:-1]) / two_h
    v_y = (b[1:-1, 2:] - b[1:-1, :-2]) / two_h
    return float(np.max(np.abs(u_x - v_y) + np.abs(u_y + v_x)))


def bilinear_sample(field: GridField, xs, ys) -> np.ndarray:
    """Bilinear interpolation of a scalar field at arbitrary in-grid points."""
    if field.components != 1:
        raise ValueError("bilinear_sample expects a scalar field")
    nx, ny = field.shape
    fx = (np.asarray(xs, dtype=float) - field.origin[0]) / field.h
    fy = (np.asarray(ys, dtype=float) - field.origin[1]) / field.h
    if np.any(fx < -1e-9) or np.any(fx > nx - 1 + 1e-9) \
            or np.any(fy < -1e-9) or np.any(fy > ny - 1 + 1e-9):
        raise ValueError("sample point outside the grid")
    i0 = np.clip(np.floor(fx).astype(int), 0, nx - 2)
    j0 = np.clip(np.floor(fy).astype(int), 0, ny - 2)
    tx = fx - i0
    ty = fy - j0
    z = field.component(0)
    return ((1 - tx) * (1 - ty) * z[i0, j0] + tx * (1 - ty) * z[i0 + 1, j0]
            + (1 - tx) * ty * z[i0, j0 + 1] + tx * ty * z[i0 + 1, j0 + 1])


def mean_value_check(u: GridField, center, radii, samples_per_h: int = 64):
    """Per radius: |circle average of u - u(center)| via trapezoid sampling.

    The circle average uses at least ``samples_per_h * ceil(r/h)`` equally
    spaced points (the trapezoid rule is spectrally accurate on periodic
    integrands, so bilinear interpolation dominates the error).
    """
    center = np.asarray(center, dtype=float)
    (x0, x1), (y0, y1) = u.extent
    u_center = float(bilinear_sample(u, np.array([center[0]]),
                                     np.array([center[1]]))[0])
    deviations = []
    for r in radii:
        if r <= 0:
            raise ValueError("radii must be positive")
        if (center[0] - r < x0 or center[0] + r > x1
                or center[1] - r < y0 or center[1] + r > y1):
            raise ValueError(f"circle of radius {r} leaves the grid")
        count = samples_per_h * int(np.ceil(r / u.h))
        theta = 2.0 * np.pi * np.arange(count) / count
        ring = bilinear_sample(u, center[0] + r * np.cos(theta),
                               center[1] + r * np.sin(theta))
        deviations.append(abs(float(np.mean(ring)) - u_center))
    return deviations


# ---------------------------------------------------------------------------
# constant-coefficient second-order system: assembly and direct solve

def _offset_weights(tensor: EllipticTensor):
    """Stencil weights: offset (dx, dy) -> m-by-m coupling matrix (units 1/h^2)."""
    a = tensor.coeffs
    m = tensor.m
    w = {}
    xx = a[:, 0, :, 0]
    yy = a[:, 1, :, 1]
    cross = a[:, 0, :, 1] + a[:, 1, :, 0]
    w[(1, 0)] = xx.copy()
    w[(-1, 0)] = xx.copy()
    w[(0, 1)] = yy.copy()
    w[(0, -1)] = yy.copy()
    w[(0, 0)] = -2.0 * (xx + yy)
    w[(1, 1)] = cross / 4.0
    w[(-1, -1)] = cross / 4.0
    w[(1, -1)] = -cross / 4.0
    w[(-1, 1)] = -cross / 4.0
    assert all(mat.shape == (m, m) for mat in w.values())
    return w


def assemble_and_solve_system(tensor: EllipticTensor, boundary: GridField,
                              mu_tol: float = 1e-8) -> GridField:
    """Solve the centered discretization of div(A grad v) = 0 with Dirichlet data.

    ``boundary`` supplies the full grid; only its outer ring is read.  The
    returned field merges the solved interior with that ring.  Requires a
    strongly elliptic tensor (mu above ``mu_tol``) over a 2-d domain.
    """
    if tensor.n != 2:
        raise ValueError("grid solves are 2-d; tensor must have n = 2")
    if tensor.mu <= mu_tol:
        raise NotEllipticError(f"mu={tensor.mu} is not above {mu_tol}")
    m = tensor.m
    if boundary.components != m:
        raise ValueError(f"boundary field has {boundary.components} components, "
                         f"system needs {m}")
    nx, ny = boundary.shape
    inner_x, inner_y = nx - 2, ny - 2
    n_unknown = inner_x * inner_y * m
    weights = _offset_weights(tensor)
    scale = 1.0 / boundary.h**2

    ii, jj = np.meshgrid(np.arange(1, nx - 1), np.arange(1, ny - 1), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()

    def unknown_index(i, j, comp):
        return ((i - 1) * inner_y + (j - 1)) * m + comp

    rows, cols, vals = [], [], []
    rhs = np.zeros(n_unknown)
    bvals = boundary.values
    for (dx, dy), couple in weights.items():
        ti, tj = ii + dx, jj + dy
        on_boundary = (ti == 0) | (ti == nx - 1) | (tj == 0) | (tj == ny - 1)
        interior = ~on_boundary
        for ci in range(m):
            row_idx = unknown_index(ii, jj, ci)
            for cj in range(m):
                wgt = couple[ci, cj] * scale
                if wgt == 0.0:
                    continue
                if np.any(interior):
                    rows.append(row_idx[interior])
                    cols.append(unknown_index(ti[interior], tj[interior], cj))
                    vals.append(np.full(int(interior.sum()), wgt))
                if np.any(on_boundary):
                    np.add.at(rhs, row_idx[on_boundary],
                              -wgt * bvals[ti[on_boundary], tj[on_boundary], cj])
    matrix = coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_unknown, n_unknown)).tocsr()
    solution = spsolve(matrix, rhs)
    out = np.array(bvals)
    out[1:-1, 1:-1, :] = solution.reshape(inner_x, inner_y, m)
    return GridField(origin=boundary.origin, h=boundary.h, values=out)


def system_residual(tensor: EllipticTensor, field: GridField) -> float:
    """Max absolute value of the discrete operator at interior nodes."""
    if field.components != tensor.m:
        raise ValueError("component mismatch")
    weights = _offset_weights(tensor)
    vals = field.values
    nx, ny, m = vals.shape
    acc = np.zeros((nx - 2, ny - 2, m))
    for (dx, dy), couple in weights.items():
        block = vals[1 + dx:nx - 1 + dx, 1 + dy:ny - 1 + dy, :]
        acc += np.einsum("xyj,ij->xyi", block, couple)
    return float(np.max(np.abs(acc)) / field.h**2)


def spectral_profile(field: GridField):
    """Radially binned magnitude of the 2-d discrete Fourier transform.

    A qualitative diagnostic: solutions of constant-coefficient elliptic
    systems show fast (super-algebraic) decay of these amplitudes.  Returns
    (wavenumbers, max amplitude per annulus) for the first component.
    """
    z = field.component(0)
    z = z - z.mean()
    amp = np.abs(np.fft.fft2(z))
    kx = np.fft.fftfreq(z.shape[0])[:, None]
    ky = np.fft.fftfreq(z.shape[1])[None, :]
    k = np.hypot(kx, ky)
    k_max = 0.5
    bins = np.linspace(0.0, k_max, 33)
    centers = 0.5 * (bins[:-1] + bins[1:])
    profile = np.zeros(centers.size)
    for b in range(centers.size):
        sel = (k >= bins[b]) & (k < bins[b + 1])
        profile[b] = amp[sel].max() if np.any(sel) else 0.0
    return centers, profile
