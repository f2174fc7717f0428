import numpy as np
import pytest

from oracles import five_point_oracle
from rigidity.corpus import GRID_FIELDS, SCALAR_FIELDS, RadialBump
from rigidity.elliptic import (
    Mollifier,
    NotEllipticError,
    UndefinedRatioError,
    UnderResolvedKernelError,
    assemble_and_solve_system,
    bilinear_sample,
    caccioppoli_ratio,
    cauchy_riemann_residual,
    inclusion_distance,
    mean_value_check,
    mollify,
    spectral_profile,
    system_residual,
    weak_laplace_residual,
)
from rigidity.grid import GridField, difference_quotient, finite_difference_gradient
from rigidity.matrix_space import (
    coefficient_tensor,
    conformal_subspace,
    diagonal_subspace,
    orthonormalize,
)


def vec_field(name, n=33, lo=-1.0, hi=1.0):
    return GridField.on_square(GRID_FIELDS[name].components, lo, hi, n)


def scalar_field(name, n=33, lo=-1.0, hi=1.0):
    return GridField.on_square(SCALAR_FIELDS[name][0], lo, hi, n)


class TestMollifier:
    def test_stencil_mass_and_symmetry(self):
        kernel = Mollifier(epsilon=0.5).stencil(h=0.1)
        assert abs(kernel.sum() - 1.0) < 1e-12
        assert np.allclose(kernel, kernel.T)
        assert np.allclose(kernel, kernel[::-1, :])

    def test_under_resolved_kernel_rejected(self):
        with pytest.raises(UnderResolvedKernelError):
            Mollifier(epsilon=0.1).stencil(h=0.1)

    def test_constant_field_is_fixed(self):
        f = GridField.on_square(lambda x, y: np.full_like(x, 2.5), -1, 1, 33)
        out = mollify(f, Mollifier(epsilon=4 * f.h))
        assert np.allclose(out.values, 2.5, atol=1e-13)

    def test_affine_field_is_fixed_on_eroded_domain(self):
        f = vec_field("affine")
        out = mollify(f, Mollifier(epsilon=4 * f.h))
        gx, gy = out.meshgrid()
        assert np.allclose(out.values[:, :, 0], gx, atol=1e-13)
        assert np.allclose(out.values[:, :, 1], gy, atol=1e-13)

    def test_empty_eroded_domain_rejected(self):
        f = vec_field("z2", n=9)
        with pytest.raises(UnderResolvedKernelError):
            mollify(f, Mollifier(epsilon= 4 * f.h * 2))

    def test_commutes_with_differentiation_where_stencils_agree(self):
        # both orders are linear shift-invariant stencils, so away from the
        # ring where the gradient switches to one-sided differences they
        # agree to round-off
        f = vec_field("expz", n=41)
        rho = Mollifier(epsilon=3 * f.h)
        d_then_m = mollify(finite_difference_gradient(f), rho)
        m_then_d = finite_difference_gradient(mollify(f, rho))
        diff = np.abs(d_then_m.values[1:-1, 1:-1] - m_then_d.values[1:-1, 1:-1])
        assert np.max(diff) < 1e-10


class TestInclusionDistance:
    def test_holomorphic_data_lies_in_conformal_space(self):
        du = finite_difference_gradient(vec_field("z2"))
        assert inclusion_distance(du, conformal_subspace()) < 1e-12

    def test_nonholomorphic_distance_value(self):
        # gradient of (x^2, 0) at x = 1 projects to ((1,0),(0,-1)): norm sqrt(2)
        du = finite_difference_gradient(vec_field("nonholo1"))
        dist = inclusion_distance(du, conformal_subspace())
        assert abs(dist - np.sqrt(2.0)) < 1e-12

    def test_zero_field(self):
        f = GridField.on_square(
            lambda x, y: np.stack([np.zeros_like(x)] * 4, axis=-1), -1, 1, 9)
        assert inclusion_distance(f, conformal_subspace()) == 0.0

    def test_component_mismatch(self):
        with pytest.raises(ValueError):
            inclusion_distance(vec_field("z2"), conformal_subspace())

    def test_mollification_preserves_inclusion_rate(self):
        # non-polynomial holomorphic data against a fixed physical kernel:
        # the continuum convolution of a harmonic pair with a radial kernel
        # is the pair itself, so the measured defect is pure h^2 discretization
        space = conformal_subspace()
        rho = Mollifier(epsilon=0.25)
        dists = []
        for n in (33, 65, 129):
            f = vec_field("expz", n=n)
            smooth = mollify(f, rho)
            dists.append(inclusion_distance(finite_difference_gradient(smooth), space))
        rates = np.log2(np.array(dists[:-1]) / np.array(dists[1:]))
        assert np.all(rates > 1.8)

    def test_quotient_keeps_exact_inclusion(self):
        # subspaces are closed under the linear combinations a quotient takes
        space = conformal_subspace()
        field = vec_field("z2", n=25)
        w = difference_quotient(field, i=0)
        assert inclusion_distance(finite_difference_gradient(w), space) < 1e-11
        w2 = difference_quotient(w, i=1, steps=2)
        assert inclusion_distance(finite_difference_gradient(w2), space) < 1e-11


class TestCaccioppoli:
    def test_affine_closed_form(self):
        # energy 2*area(U) over integral of x^2 + y^2 on [-1,1]^2: 2/(8/3)
        for n, tol in ((65, 2e-3), (129, 5e-4)):
            v = vec_field("affine", n=n)
            ratio = caccioppoli_ratio(v, inner_margin=0.5)
            assert abs(ratio - 0.75) < tol

    def test_constant_field_ratio_zero(self):
        v = GridField.on_square(
            lambda x, y: np.stack([np.full_like(x, 2.0), np.full_like(x, -1.0)],
                                  axis=-1), -1, 1, 33)
        assert caccioppoli_ratio(v, inner_margin=0.5) == 0.0

    def test_zero_field_rejected(self):
        v = GridField.on_square(
            lambda x, y: np.stack([np.zeros_like(x)] * 2, axis=-1), -1, 1, 17)
        with pytest.raises(UndefinedRatioError):
            caccioppoli_ratio(v, inner_margin=0.5)

    def test_powers_bounded_by_affine_case(self):
        bound = 0.75
        ratios = [caccioppoli_ratio(vec_field(f"z{k}", n=129), 0.5)
                  for k in range(1, 7)]
        assert all(r <= bound * 1.05 for r in ratios)
        assert max(ratios) == ratios[0]

    def test_margin_errors(self):
        v = vec_field("z2", n=17)
        with pytest.raises(ValueError):
            caccioppoli_ratio(v, inner_margin=0.0)
        with pytest.raises(ValueError):
            caccioppoli_ratio(v, inner_margin=1.5)


class TestWeakLaplace:
    def bumps(self):
        return [RadialBump(center=(0.0, 0.0), radius=0.8),
                RadialBump(center=(0.25, -0.3), radius=0.55)]

    def test_harmonic_residual_decays(self):
        maxima = []
        for n in (65, 129, 257):
            rep = weak_laplace_residual(scalar_field("re_z2", n=n), self.bumps())
            maxima.append(rep.max_abs)
        # mean empirical order per grid halving
        slope = np.log2(maxima[0] / maxima[-1]) / 2.0
        assert slope > 1.8

    def test_affine_residual_decays_to_zero(self):
        coarse = weak_laplace_residual(scalar_field("affine_scalar", n=65),
                                       self.bumps()).max_abs
        fine = weak_laplace_residual(scalar_field("affine_scalar", n=257),
                                     self.bumps()).max_abs
        assert fine < 1e-6 and fine < 1e-2 * coarse

    def test_nonharmonic_control_stays_away_from_zero(self):
        # Laplacian of x^2 is 2, so the pairing approaches 2 * integral(phi)
        bump = RadialBump(center=(0.0, 0.0), radius=0.8)
        values = []
        for n in (65, 129, 257):
            u = scalar_field("x_squared", n=n)
            rep = weak_laplace_residual(u, [bump])
            values.append(rep.residuals[0][1])
        gx, gy = scalar_field("x_squared", n=257).meshgrid()
        mass = float(np.sum(bump.value(gx, gy))) * (2.0 / 256) ** 2
        assert abs(values[-1] - 2.0 * mass) < 1e-6
        assert all(abs(v) > 0.5 * abs(values[0]) for v in values)

    def test_support_touching_boundary_rejected(self):
        with pytest.raises(ValueError):
            weak_laplace_residual(scalar_field("re_z2"),
                                  [RadialBump(center=(0.7, 0.0), radius=0.5)])

    def test_report_invariant(self):
        rep = weak_laplace_residual(scalar_field("re_z3"), self.bumps())
        assert rep.max_abs == max(abs(v) for _, v in rep.residuals)


class TestCauchyRiemann:
    def split(self, name, n):
        field = vec_field(name, n=n)
        u = GridField(field.origin, field.h, field.values[:, :, 0])
        v = GridField(field.origin, field.h, field.values[:, :, 1])
        return u, v

    def test_quadratic_pair_exact(self):
        u, v = self.split("z2", 33)
        assert cauchy_riemann_residual(u, v) < 1e-13

    def test_exp_pair_second_order(self):
        errs = [cauchy_riemann_residual(*self.split("expz", n)) for n in (17, 33, 65)]
        rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(rates > 1.8)

    def test_nonholomorphic_witness(self):
        u = GridField.on_square(lambda x, y: x, -1, 1, 17)
        v = GridField.on_square(lambda x, y: x, -1, 1, 17)
        assert cauchy_riemann_residual(u, v) >= 1.0

    def test_grid_mismatch(self):
        u = GridField.on_square(lambda x, y: x, -1, 1, 17)
        v = GridField.on_square(lambda x, y: x, -1, 1, 33)
        with pytest.raises(ValueError):
            cauchy_riemann_residual(u, v)


class TestMeanValue:
    def test_harmonic_deviation_bounded_by_curvature(self):
        u = scalar_field("re_z2", n=129)
        devs = mean_value_check(u, center=(0.1, -0.2), radii=[0.2, 0.4])
        bound = 5.0 * u.h**2 * SCALAR_FIELDS["re_z2"][1]
        assert all(d < bound for d in devs)

    def test_x_squared_closed_form(self):
        # circle average of x^2 at radius r centered at 0 is r^2 / 2
        u = scalar_field("x_squared", n=257)
        (dev,) = mean_value_check(u, center=(0.0, 0.0), radii=[0.25])
        assert abs(dev - 0.25**2 / 2) < 0.02 * (0.25**2 / 2)

    def test_constant_exact(self):
        u = GridField.on_square(lambda x, y: np.full_like(x, 7.0), -1, 1, 33)
        (dev,) = mean_value_check(u, center=(0.0, 0.0), radii=[0.5])
        assert dev < 1e-14

    def test_circle_leaving_domain_rejected(self):
        u = scalar_field("re_z2", n=33)
        with pytest.raises(ValueError):
            mean_value_check(u, center=(0.8, 0.0), radii=[0.5])

    def test_bilinear_matches_lattice(self):
        u = scalar_field("re_z3", n=17)
        gx, gy = u.meshgrid()
        vals = bilinear_sample(u, gx.ravel(), gy.ravel())
        assert np.allclose(vals, u.component(0).ravel(), atol=1e-14)


class TestSolver:
    def test_identity_tensor_matches_five_point_oracle(self):
        tensor = coefficient_tensor(orthonormalize([], shape=(2, 2)))
        boundary = vec_field("z3", n=33)
        solved = assemble_and_solve_system(tensor, boundary)
        oracle = five_point_oracle(boundary)
        assert np.max(np.abs(solved.values - oracle)) < 1e-8

    def test_conformal_tensor_reproduces_quadratic_data(self):
        # centered stencils annihilate quadratic holomorphic data exactly, so
        # the unique discrete solution is the grid restriction of the data
        tensor = coefficient_tensor(conformal_subspace())
        boundary = vec_field("z2", n=33)
        solved = assemble_and_solve_system(tensor, boundary)
        assert np.max(np.abs(solved.values - boundary.values)) < 1e-10

    def test_conformal_tensor_second_order_on_exp(self):
        tensor = coefficient_tensor(conformal_subspace())
        errs = []
        for n in (17, 33, 65):
            boundary = vec_field("expz", n=n)
            solved = assemble_and_solve_system(tensor, boundary)
            errs.append(np.max(np.abs(solved.values - boundary.values)))
        rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(rates > 1.8)

    def test_constant_boundary_gives_constant_solution(self):
        tensor = coefficient_tensor(conformal_subspace())
        boundary = GridField.on_square(
            lambda x, y: np.stack([np.full_like(x, 1.5), np.full_like(x, -2.0)],
                                  axis=-1), -1, 1, 17)
        solved = assemble_and_solve_system(tensor, boundary)
        assert np.allclose(solved.values[:, :, 0], 1.5, atol=1e-11)
        assert np.allclose(solved.values[:, :, 1], -2.0, atol=1e-11)

    def test_interior_residual_vanishes(self):
        tensor = coefficient_tensor(conformal_subspace())
        boundary = vec_field("sinz", n=33)
        solved = assemble_and_solve_system(tensor, boundary)
        assert system_residual(tensor, solved) < 1e-9

    def test_degenerate_tensor_rejected(self):
        tensor = coefficient_tensor(diagonal_subspace())
        with pytest.raises(NotEllipticError):
            assemble_and_solve_system(tensor, vec_field("z2", n=17))

    def test_component_mismatch(self):
        tensor = coefficient_tensor(conformal_subspace())
        with pytest.raises(ValueError):
            assemble_and_solve_system(tensor, scalar_field("re_z2", n=17))


class TestSpectralProfile:
    def test_solved_field_spectrum_decays(self):
        tensor = coefficient_tensor(conformal_subspace())
        solved = assemble_and_solve_system(tensor, vec_field("expz", n=65))
        k, prof = spectral_profile(solved)
        # qualitative diagnostic only: high modes sit well below low modes
        assert prof[-4:].max() < prof[1:5].max() / 3.0
        assert k.size == prof.size
