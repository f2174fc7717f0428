"""Vector-valued fields sampled on uniform rectangular lattices.

The lattice point (i, j) sits at origin + (i*h, j*h); values are stored as
an (n_x, n_y, m) array.  Gradients use second-order centered differences in
the interior and second-order one-sided stencils on the boundary ring, so
quadratic data differentiates exactly everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridField",
    "finite_difference_gradient",
    "difference_quotient",
    "read_csv",
    "write_csv",
]


@dataclass(frozen=True)
class GridField:
    origin: np.ndarray
    h: float
    values: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float).reshape(2)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 2:
            values = values[:, :, None]
        if values.ndim != 3:
            raise ValueError("values must be (n_x, n_y) or (n_x, n_y, m)")
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")
        if values.shape[0] < 3 or values.shape[1] < 3:
            raise ValueError("grid must be at least 3 points in each direction")
        origin.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape[:2]

    @property
    def components(self) -> int:
        return self.values.shape[2]

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.h * np.arange(self.values.shape[axis])

    def meshgrid(self):
        return np.meshgrid(self.axis_coords(0), self.axis_coords(1), indexing="ij")

    @property
    def extent(self):
        """((x0, x1), (y0, y1)) of the sampled rectangle."""
        nx, ny = self.shape
        return ((self.origin[0], self.origin[0] + (nx - 1) * self.h),
                (self.origin[1], self.origin[1] + (ny - 1) * self.h))

    @classmethod
    def from_function(cls, func, origin, h, shape) -> "GridField":
        """Sample ``func(xs, ys) -> (..., m) or (...)`` on the lattice."""
        nx, ny = shape
        xs = origin[0] + h * np.arange(nx)
        ys = origin[1] + h * np.arange(ny)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        vals = np.asarray(func(gx, gy), dtype=float)
        if vals.ndim == 2:
            vals = vals[:, :, None]
        return cls(origin=np.asarray(origin, dtype=float), h=float(h), values=vals)

    @classmethod
    def on_square(cls, func, lo, hi, n) -> "GridField":
        """Sample on an n-by-n lattice over [lo, hi]^2."""
        h = (hi - lo) / (n - 1)
        return cls.from_function(func, (lo, lo), h, (n, n))

    def component(self, c: int) -> np.ndarray:
        return self.values[:, :, c]

    def eroded(self, rings: int) -> "GridField":
        """Drop ``rings`` lattice layers from every side."""
        nx, ny = self.shape
        if nx - 2 * rings < 3 or ny - 2 * rings < 3:
            raise ValueError("erosion leaves too small a grid")
        return GridField(origin=self.origin + rings * self.h, h=self.h,
                         values=self.values[rings:nx - rings, rings:ny - rings])


def finite_difference_gradient(u: GridField) -> GridField:
    """Gradient field with m*2 components ordered (du_c/dx, du_c/dy) per component.

    For an m-vector field the output components flatten the m-by-2 Jacobian
    row-major, matching the layout expected by the inclusion checks.
    """
    nx, ny = u.shape
    out = np.empty((nx, ny, u.components * 2))
    for c in range(u.components):
        comp = u.component(c)
        out[:, :, 2 * c] = np.gradient(comp, u.h, axis=0, edge_order=2)
        out[:, :, 2 * c + 1] = np.gradient(comp, u.h, axis=1, edge_order=2)
    return GridField(origin=u.origin, h=u.h, values=out)


def difference_quotient(u: GridField, i: int, steps: int = 1) -> GridField:
    """Forward difference quotient (u(x + steps*h*e_i) - u(x)) / (steps*h).

    The result lives on the grid shrunk by ``steps`` points along axis ``i``.
    If the gradient of u lies in a linear subspace so does the gradient of
    the quotient, since it is a linear combination of translates of u.
    """
    if i not in (0, 1):
        raise ValueError("direction index must be 0 or 1")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    nx, ny = u.shape
    if u.shape[i] - steps < 3:
        raise ValueError("grid too small for the requested quotient")
    span = steps * u.h
    if i == 0:
        w = (u.values[steps:, :, :] - u.values[:nx - steps, :, :]) / span
    else:
        w = (u.values[:, steps:, :] - u.values[:, :ny - steps, :]) / span
    return GridField(origin=u.origin, h=u.h, values=w)


# ---------------------------------------------------------------------------
# CSV interchange: header "m,n_x,n_y,h,origin_x,origin_y", then one row per
# lattice point in row-major order with m float columns.

def write_csv(field: GridField, path):
    nx, ny = field.shape
    header = ",".join([str(field.components), str(nx), str(ny),
                       format(field.h, ".17g"),
                       format(field.origin[0], ".17g"),
                       format(field.origin[1], ".17g")])
    flat = field.values.reshape(nx * ny, field.components)
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in flat:
            fh.write(",".join(format(x, ".17g") for x in row) + "\n")


def read_csv(path) -> GridField:
    with open(path) as fh:
        head = fh.readline().strip().split(",")
        if len(head) != 6:
            raise ValueError(f"{path}: header must be m,n_x,n_y,h,origin_x,origin_y")
        m, nx, ny = int(head[0]), int(head[1]), int(head[2])
        h, ox, oy = float(head[3]), float(head[4]), float(head[5])
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape != (nx * ny, m):
        raise ValueError(f"{path}: expected {nx * ny} rows of {m} columns, "
                         f"got {data.shape}")
    return GridField(origin=(ox, oy), h=h, values=data.reshape(nx, ny, m))
