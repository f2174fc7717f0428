"""Acceptance gate: every exit criterion at its stated tolerance.

Each test prints one [PASS]/[FAIL] line (visible under ``pytest -s`` or in
the captured output of a failing run) and then asserts.  Expected values are
frozen from closed forms and independent oracles computed here, never from
the code paths under test.
"""

import time

import numpy as np
import pytest

from rigidity.corpus import (
    DIVERGENCE_FIELDS,
    GAUGE_INTEGRANDS,
    GRID_FIELDS,
    SCALAR_FIELDS,
    ProductBump,
    RadialBump,
)
from rigidity.elliptic import (
    Mollifier,
    assemble_and_solve_system,
    caccioppoli_ratio,
    inclusion_distance,
    mean_value_check,
    mollify,
    weak_laplace_residual,
)
from rigidity.gauge_integral import (
    Cell,
    boundary_flux,
    divergence_integral_2d,
    hk_integrate_1d,
    verify_vanishing,
)
from rigidity.grid import GridField, finite_difference_gradient
from rigidity.matrix_space import (
    coefficient_tensor,
    conformal_subspace,
    diagonal_subspace,
    legendre_hadamard_constant,
    orthonormalize,
    project,
    random_subspace,
    rank1_gap,
)
from rigidity.report import fit_order

INV_SQRT2 = 1.0 / np.sqrt(2.0)
SIN1 = float(np.sin(1.0))
EXACT_FLOOR = 1e-10  # below this, a defect sequence is exact reproduction


def _report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def _guarded_order(errors):
    errors = np.asarray(errors, dtype=float)
    if np.all(errors < EXACT_FLOOR):
        return np.inf
    return fit_order(errors)


def _sample(name, n, lo=-1.0, hi=1.0):
    return GridField.on_square(GRID_FIELDS[name].components, lo, hi, n)


def _scalar(name, n):
    return GridField.on_square(SCALAR_FIELDS[name][0], -1.0, 1.0, n)


def _subspace_collection():
    spaces = [("conformal", conformal_subspace()),
              ("zero", orthonormalize([], shape=(2, 2))),
              ("diagonal", diagonal_subspace())]
    for seed in range(10):
        spaces.append((f"rand-2x2-{seed}", random_subspace(2, 2, 1 + seed % 3, seed)))
    for seed in range(10):
        spaces.append((f"rand-3x2-{seed}", random_subspace(3, 2, 1 + seed % 5,
                                                           100 + seed)))
    return spaces


def test_conformal_rank1_gap_vs_brute_force():
    # dense 720x720 angular grid over both unit circles, independent oracle
    start = time.perf_counter()
    space = conformal_subspace()
    theta = np.linspace(0.0, 2 * np.pi, 720, endpoint=False)
    vecs = np.column_stack([np.cos(theta), np.sin(theta)])
    flat = space.flat_basis
    best = np.inf
    for a in vecs:
        outers = np.einsum("i,tj->tij", a, vecs).reshape(720, 4)
        resid = outers - outers @ flat.T @ flat
        best = min(best, float(np.min(np.linalg.norm(resid, axis=1))))
    gap = rank1_gap(space).gap
    elapsed = time.perf_counter() - start
    ok = abs(gap - best) < 1e-6 and abs(gap - INV_SQRT2) < 1e-6 and elapsed < 5.0
    _report("conformal-rank1-gap", ok,
            f"gap={gap:.9f} oracle={best:.9f} closed-form={INV_SQRT2:.9f} "
            f"time={elapsed:.2f}s (budget 5s)")


def test_mu_equals_gap_squared_across_subspaces():
    start = time.perf_counter()
    worst = 0.0
    for name, space in _subspace_collection():
        gap = rank1_gap(space).gap
        mu = legendre_hadamard_constant(coefficient_tensor(space))
        worst = max(worst, abs(mu - gap**2))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-6 and elapsed < 30.0
    _report("mu-equals-gap-squared", ok,
            f"worst |mu - gap^2| = {worst:.3e} over 23 subspaces, "
            f"time={elapsed:.2f}s (budget 30s)")


def test_quadratic_form_identity_on_random_pairs():
    worst = 0.0
    for name, space in _subspace_collection():
        tensor = coefficient_tensor(space)
        rng = np.random.default_rng(hash(name) % 2**32)
        a = rng.standard_normal((1000, space.m))
        a /= np.linalg.norm(a, axis=1, keepdims=True)
        b = rng.standard_normal((1000, space.n))
        b /= np.linalg.norm(b, axis=1, keepdims=True)
        form = np.einsum("iajb,si,sa,sj,sb->s", tensor.coeffs, a, b, a, b,
                         optimize=True)
        outers = np.einsum("si,sa->sia", a, b).reshape(1000, -1)
        direct = np.sum((outers @ space.projector("L_perp")) ** 2, axis=1)
        worst = max(worst, float(np.max(np.abs(form - direct))))
    ok = worst < 1e-10
    _report("quadratic-form-identity", ok,
            f"worst deviation {worst:.3e} over 1000 unit pairs x 23 subspaces")


def test_gauge_ftc_with_non_absolute_witness():
    start = time.perf_counter()
    ent = GAUGE_INTEGRANDS["x2sin_inv_x2"]
    oracle = float(ent["primitive"](1.0) - ent["primitive"](0.0))  # = sin(1)
    res = hk_integrate_1d(ent["f"], 0.0, 1.0, singular_points=(0.0,), tol=1e-6)
    elapsed = time.perf_counter() - start
    tail = np.asarray(res.absolute_sum_history[-5:])
    growth = np.diff(tail) / tail[:-1]
    ok = (res.converged and abs(res.value - oracle) < 1e-6
          and np.all(growth > 0.10) and elapsed < 10.0)
    _report("gauge-ftc-non-absolute", ok,
            f"value={res.value:.9f} oracle={oracle:.9f} "
            f"err={abs(res.value - oracle):.2e} min growth "
            f"{100 * growth.min():.1f}%/level over final 5 levels, "
            f"time={elapsed:.2f}s (budget 10s)")


def test_divergence_theorem_on_corpus():
    start = time.perf_counter()
    worst = 0.0
    details = []
    for name, ent in sorted(DIVERGENCE_FIELDS.items()):
        res = divergence_integral_2d(ent["field"], ent["figure"], ent["thin"],
                                     tol=1e-5)
        flux = boundary_flux(ent["field"], ent["figure"])
        gap = abs(res.value - flux)
        worst = max(worst, gap)
        details.append(f"{name}:{gap:.2e}")
    elapsed = time.perf_counter() - start
    ok = worst < 1e-5 and elapsed < 60.0
    _report("divergence-theorem", ok,
            f"|integral - flux| {' '.join(details)}, time={elapsed:.1f}s "
            f"(budget 60s)")


def test_vanishing_property_three_placements_two_directions():
    box = Cell((-2.0, -2.0), (2.0, 2.0))
    bumps = [RadialBump(center=(0.0, 0.0), radius=1.0),
             ProductBump(center=(0.0, 0.0), radius=(0.9, 0.7)),
             RadialBump(center=(0.3, -0.2), radius=0.8, amplitude=1.5)]
    worst = 0.0
    for bump in bumps:
        for direction in (0, 1):
            res = verify_vanishing(bump, direction, box, tol=1e-8)
            worst = max(worst, abs(res.value))
    ok = worst < 1e-8
    _report("vanishing-partials", ok,
            f"worst |integral| = {worst:.2e} over 3 placements x 2 directions")


def test_inclusion_preserved_under_mollification():
    space = conformal_subspace()
    rho = Mollifier(epsilon=0.25)
    dists = []
    for n in (257, 513):
        du = finite_difference_gradient(mollify(_sample("z2", n), rho))
        dists.append(inclusion_distance(du, space))
    order = _guarded_order(dists)
    # quadratic data is reproduced exactly by the symmetric unit-mass stencil,
    # so these distances sit at round-off and the decay clause is witnessed by
    # exact reproduction; exp(z) provides the measurable-rate companion
    exp_dists = []
    for n in (129, 257, 513):
        du = finite_difference_gradient(mollify(_sample("expz", n), rho))
        exp_dists.append(inclusion_distance(du, space))
    exp_order = _guarded_order(exp_dists)
    ok = dists[0] < 1e-3 and order >= 1.8 and exp_order >= 1.8
    _report("mollification-preserves-inclusion", ok,
            f"z2 distances {dists[0]:.2e} -> {dists[1]:.2e} (order {order}), "
            f"expz order {exp_order:.2f}")


def test_weak_harmonicity_orders_and_control():
    bumps = [RadialBump(center=(0.0, 0.0), radius=0.8),
             RadialBump(center=(0.25, -0.3), radius=0.55)]
    grids = (65, 129, 257)
    orders = {}
    for name in ("z2", "z3", "expz"):
        for comp, label in ((0, "u"), (1, "v")):
            maxima = []
            for n in grids:
                f = _sample(name, n)
                scalar = GridField(f.origin, f.h, f.values[:, :, comp])
                maxima.append(weak_laplace_residual(scalar, bumps).max_abs)
            orders[f"{label}({name})"] = _guarded_order(maxima)
    control = [weak_laplace_residual(_scalar("x_squared", n), bumps[:1]).max_abs
               for n in grids]
    min_order = min(orders.values())
    persists = all(v > 0.5 * control[0] for v in control)
    ok = min_order >= 1.8 and persists
    _report("weak-harmonicity", ok,
            f"min empirical order {min_order:.2f} over "
            f"{sorted(orders)} across 65/129/257; x^2 control "
            f"{control[0]:.4f} -> {control[-1]:.4f} (stays above half)")


def test_caccioppoli_ratios_bounded_and_reproducible():
    affine_bound = 2.0 * 1.0 / (8.0 / 3.0)  # energy 2*area(U) over int |z|^2
    per_resolution = {}
    for n in (129, 257):
        per_resolution[n] = [caccioppoli_ratio(_sample(f"z{k}", n), 0.5)
                             for k in range(1, 7)]
    worst = max(max(r) for r in per_resolution.values())
    drift = abs(max(per_resolution[129]) - max(per_resolution[257]))
    ok = worst <= affine_bound * 1.05 and drift <= 1e-3
    _report("caccioppoli-uniform-bound", ok,
            f"max ratio {worst:.4f} <= {affine_bound:.4f} (+5%), "
            f"max drift across resolutions {drift:.2e} <= 1e-3")


def test_weyl_mean_value():
    n = 257
    worst_ratio = 0.0
    for name in ("re_z2", "im_z2", "re_z3", "re_expz"):
        func, second_bound = SCALAR_FIELDS[name]
        u = _scalar(name, n)
        devs = mean_value_check(u, center=(0.05, -0.1), radii=[0.2, 0.4])
        bound = 5.0 * u.h**2 * second_bound
        worst_ratio = max(worst_ratio, max(devs) / bound)
    u = _scalar("x_squared", n)
    (dev,) = mean_value_check(u, center=(0.0, 0.0), radii=[0.25])
    expected = 0.25**2 / 2.0
    ok = worst_ratio < 1.0 and abs(dev - expected) < 0.02 * expected
    _report("weyl-mean-value", ok,
            f"harmonic deviations at {100 * worst_ratio:.1f}% of the "
            f"5 h^2 max|D^2 u| bound; x^2 deviation {dev:.6f} vs r^2/2 = "
            f"{expected:.6f} (2% allowed)")


def test_elliptic_solve_conformal_and_identity():
    conformal = coefficient_tensor(conformal_subspace())
    errs_z2 = []
    for n in (65, 129, 257):
        boundary = _sample("z2", n)
        solved = assemble_and_solve_system(conformal, boundary)
        errs_z2.append(float(np.max(np.abs(solved.values - boundary.values))))
    order_z2 = _guarded_order(errs_z2)
    # quadratic holomorphic data is annihilated exactly by the centered
    # stencils, so the z^2 errors are round-off; exp(z) measures the rate
    errs_exp = []
    for n in (65, 129, 257):
        boundary = _sample("expz", n)
        solved = assemble_and_solve_system(conformal, boundary)
        errs_exp.append(float(np.max(np.abs(solved.values - boundary.values))))
    order_exp = _guarded_order(errs_exp)

    identity = coefficient_tensor(orthonormalize([], shape=(2, 2)))
    boundary = _sample("z3", 65)
    solved = assemble_and_solve_system(identity, boundary)
    from oracles import five_point_oracle
    oracle_gap = float(np.max(np.abs(solved.values - five_point_oracle(boundary))))

    ok = order_z2 >= 1.8 and order_exp >= 1.8 and oracle_gap < 1e-8
    _report("elliptic-solve", ok,
            f"z2 errors {errs_z2[0]:.1e}/{errs_z2[-1]:.1e} (order {order_z2}), "
            f"expz order {order_exp:.2f}, identity-vs-5pt {oracle_gap:.1e}")
