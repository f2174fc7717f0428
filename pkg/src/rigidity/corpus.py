"""Named test fields: holomorphic pairs, controls, bumps, and wild integrands.

Everything here is analytic data — closed-form values, derivatives and
antiderivatives — registered under string keys so the command line and the
verification suites can address a field by name.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gauge_integral import Cell, Figure, ThinSet, VectorField2D

__all__ = [
    "PlaneField",
    "RadialBump",
    "ProductBump",
    "GRID_FIELDS",
    "SCALAR_FIELDS",
    "GAUGE_INTEGRANDS",
    "DIVERGENCE_FIELDS",
    "holomorphic_field",
    "grid_field_names",
    "gauge_integrand_names",
    "divergence_field_names",
]


@dataclass(frozen=True)
class PlaneField:
    """A planar vector field with its analytic Jacobian.

    ``components(xs, ys)`` returns an array (..., m); ``jacobian(xs, ys)``
    returns (..., m, 2) or None when no closed form is registered.
    """

    name: str
    m: int
    components: object
    jacobian: object = None
    second_derivative_bound: float = 0.0


def holomorphic_field(name, f, fprime, second_bound=0.0) -> PlaneField:
    """(Re f, Im f) of a complex-analytic f; the Jacobian follows from f'."""

    def components(xs, ys):
        w = f(xs + 1j * ys)
        return np.stack([w.real, w.imag], axis=-1)

    def jacobian(xs, ys):
        d = fprime(xs + 1j * ys)
        # rows (u, v), columns (d/dx, d/dy); Cauchy-Riemann structure
        return np.stack([
            np.stack([d.real, -d.imag], axis=-1),
            np.stack([d.imag, d.real], axis=-1),
        ], axis=-2)

    return PlaneField(name=name, m=2, components=components, jacobian=jacobian,
                      second_derivative_bound=second_bound)


def _power_field(k: int, domain_radius=np.sqrt(2.0)) -> PlaneField:
    bound = 0.0 if k < 2 else k * (k - 1) * domain_radius ** (k - 2)
    return holomorphic_field(f"z{k}", lambda z: z ** k,
                             lambda z: k * z ** (k - 1.0), bound)


def _nonholo1() -> PlaneField:
    def components(xs, ys):
        return np.stack([xs ** 2, np.zeros_like(xs)], axis=-1)

    def jacobian(xs, ys):
        zero = np.zeros_like(xs)
        return np.stack([
            np.stack([2.0 * xs, zero], axis=-1),
            np.stack([zero, zero], axis=-1),
        ], axis=-2)

    return PlaneField("nonholo1", 2, components, jacobian, 2.0)


def _affine() -> PlaneField:
    def components(xs, ys):
        return np.stack([xs, ys], axis=-1)

    def jacobian(xs, ys):
        one, zero = np.ones_like(xs), np.zeros_like(xs)
        return np.stack([
            np.stack([one, zero], axis=-1),
            np.stack([zero, one], axis=-1),
        ], axis=-2)

    return PlaneField("affine", 2, components, jacobian, 0.0)


_E = float(np.e)
GRID_FIELDS = {
    "affine": _affine(),
    "z2": _power_field(2),
    "z3": _power_field(3),
    "z4": _power_field(4),
    "z5": _power_field(5),
    "z6": _power_field(6),
    "expz": holomorphic_field("expz", np.exp, np.exp, _E),
    "sinz": holomorphic_field("sinz", np.sin, np.cos, float(np.cosh(1.0) + 1)),
    "nonholo1": _nonholo1(),
}
GRID_FIELDS["z1"] = _affine()

# scalar fields used by the weak-Laplace and mean-value checks
SCALAR_FIELDS = {
    "re_z2": (lambda xs, ys: xs ** 2 - ys ** 2, 2.0),      # harmonic
    "im_z2": (lambda xs, ys: 2.0 * xs * ys, 2.0),          # harmonic
    "re_z3": (lambda xs, ys: xs ** 3 - 3 * xs * ys ** 2, 6.0 * np.sqrt(2.0)),
    "re_expz": (lambda xs, ys: np.exp(xs) * np.cos(ys), _E),
    "x_squared": (lambda xs, ys: xs ** 2, 2.0),            # control: not harmonic
    "affine_scalar": (lambda xs, ys: 1.0 + 2.0 * xs - 3.0 * ys, 0.0),
}


class RadialBump:
    """Smooth bump exp(-1/(1 - (r/R)^2)) supported in the disc of radius R."""

    def __init__(self, center=(0.0, 0.0), radius=1.0, amplitude=1.0):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.amplitude = float(amplitude)

    def _rho2(self, xs, ys):
        dx = (np.asarray(xs, dtype=float) - self.center[0]) / self.radius
        dy = (np.asarray(ys, dtype=float) - self.center[1]) / self.radius
        return dx, dy, dx * dx + dy * dy

    def value(self, xs, ys):
        _, _, rho2 = self._rho2(xs, ys)
        inside = rho2 < 1.0
        u = np.where(inside, 1.0 - rho2, 1.0)
        return np.where(inside, self.amplitude * np.exp(-1.0 / u), 0.0)

    def partial(self, i, xs, ys):
        dx, dy, rho2 = self._rho2(xs, ys)
        inside = rho2 < 1.0
        u = np.where(inside, 1.0 - rho2, 1.0)
        # d/dx_i of exp(-1/u): factor -2/(u^2) * (x_i - c_i)/R^2 times the bump
        g = np.where(inside, self.amplitude * np.exp(-1.0 / u), 0.0)
        comp = dx if i == 0 else dy
        return np.where(inside, g * (-2.0 * comp) / (u * u) / self.radius, 0.0)

    def laplacian(self, xs, ys):
        _, _, rho2 = self._rho2(xs, ys)
        inside = rho2 < 1.0
        u = np.where(inside, 1.0 - rho2, 1.0)
        g = np.where(inside, self.amplitude * np.exp(-1.0 / u), 0.0)
        factor = (-4.0 / u**2 - 8.0 * rho2 / u**3 + 4.0 * rho2 / u**4)
        return np.where(inside, g * factor / self.radius**2, 0.0)


class ProductBump:
    """Product of two 1-d bumps; supported in an axis-aligned rectangle."""

    def __init__(self, center=(0.0, 0.0), radius=(1.0, 1.0), amplitude=1.0):
        self.center = np.asarray(center, dtype=float)
        self.radius = np.asarray(radius, dtype=float)
        self.amplitude = float(amplitude)

    def _one(self, s, c, r):
        rho2 = ((np.asarray(s, dtype=float) - c) / r) ** 2
        inside = rho2 < 1.0
        u = np.where(inside, 1.0 - rho2, 1.0)
        g = np.where(inside, np.exp(-1.0 / u), 0.0)
        dg = np.where(inside, g * (-2.0 * (s - c) / r**2) / (u * u), 0.0)
        return g, dg

    def value(self, xs, ys):
        gx, _ = self._one(xs, self.center[0], self.radius[0])
        gy, _ = self._one(ys, self.center[1], self.radius[1])
        return self.amplitude * gx * gy

    def partial(self, i, xs, ys):
        gx, dgx = self._one(xs, self.center[0], self.radius[0])
        gy, dgy = self._one(ys, self.center[1], self.radius[1])
        return self.amplitude * (dgx * gy if i == 0 else gx * dgy)


# ---------------------------------------------------------------------------
# 1-d gauge corpus

def _wild_primitive(x):
    x = np.asarray(x, dtype=float)
    safe = np.where(x == 0.0, 1.0, x)
    return np.where(x == 0.0, 0.0, safe ** 2 * np.sin(safe ** -2))


def _wild_derivative(x):
    """F'(x) for F = x^2 sin(1/x^2), with the defined value F'(0) = 0."""
    x = np.asarray(x, dtype=float)
    safe = np.where(x == 0.0, 1.0, x)
    out = 2.0 * safe * np.sin(safe ** -2) - (2.0 / safe) * np.cos(safe ** -2)
    return np.where(x == 0.0, 0.0, out)


GAUGE_INTEGRANDS = {
    "x2sin_inv_x2": {
        "f": _wild_derivative,
        "interval": (0.0, 1.0),
        "singular_points": (0.0,),
        "exact": float(np.sin(1.0)),
        "primitive": _wild_primitive,
        "non_absolute": True,
    },
    "one": {
        "f": lambda x: np.ones_like(np.asarray(x, dtype=float)),
        "interval": (0.0, 1.0),
        "singular_points": (),
        "exact": 1.0,
        "non_absolute": False,
    },
    "two_x": {
        "f": lambda x: 2.0 * np.asarray(x, dtype=float),
        "interval": (0.0, 1.0),
        "singular_points": (),
        "exact": 1.0,
        "non_absolute": False,
    },
}


# ---------------------------------------------------------------------------
# 2-d divergence corpus on the unit square

def _unit_square():
    return Figure([Cell((0.0, 0.0), (1.0, 1.0))])


DIVERGENCE_FIELDS = {
    "linear_radial": {
        "field": VectorField2D(
            "linear_radial",
            vx=lambda xs, ys: np.asarray(xs, dtype=float),
            vy=lambda xs, ys: np.asarray(ys, dtype=float),
            div=lambda xs, ys: np.full(np.asarray(xs, dtype=float).shape, 2.0),
        ),
        "figure": _unit_square(),
        "thin": ThinSet(),
        "exact": 2.0,
    },
    "rotation": {
        "field": VectorField2D(
            "rotation",
            vx=lambda xs, ys: -np.asarray(ys, dtype=float),
            vy=lambda xs, ys: np.asarray(xs, dtype=float),
            div=lambda xs, ys: np.zeros(np.asarray(xs, dtype=float).shape),
        ),
        "figure": _unit_square(),
        "thin": ThinSet(),
        "exact": 0.0,
    },
    "singular_x": {
        "field": VectorField2D(
            "singular_x",
            vx=lambda xs, ys: _wild_primitive(xs),
            vy=lambda xs, ys: np.zeros(np.asarray(xs, dtype=float).shape),
            div=lambda xs, ys: _wild_derivative(xs),
        ),
        "figure": _unit_square(),
        "thin": ThinSet(segments=[((0.0, 0.0), (0.0, 1.0))]),
        "exact": float(np.sin(1.0)),
    },
}


def grid_field_names():
    return sorted(GRID_FIELDS)


def gauge_integrand_names():
    return sorted(GAUGE_INTEGRANDS)


def divergence_field_names():
    return sorted(DIVERGENCE_FIELDS)
