"""Grid, distance, measure and norm checks.

Oracle policy: distances against a frozen high-precision law-of-cosines
evaluation, the measure against the closed-form ball area, and norms
against adaptive radial quadrature plus frozen literals.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import random_oneform, random_scalar
from hypflow import (
    OneForm,
    PolarGrid,
    ScalarField,
    SupportError,
    check_support,
    geodesic_distance,
    lp_norm,
    sharp_flat,
    volume_density,
)

# sqrt(2 pi * int_0^8 exp(-2 (rho-2)^2) sinh rho drho), mpmath at 30 digits
BUMP_L2 = 5.6889081214310981
# 2 pi (cosh 8 - 1)
AREA_8 = 9358.6735813298594


class TestGeodesicDistance:
    def test_identity(self):
        # arccosh near 1 has square-root sensitivity to rounding in the
        # cosh/sinh cancellation, so "zero" means zero at sqrt(eps) scale.
        assert geodesic_distance((1.0, 0.0), (1.0, 0.0)) == pytest.approx(
            0.0, abs=1e-7)

    def test_collinear_through_origin(self):
        # cosh d = cosh^2(1) + sinh^2(1) = cosh(2)
        assert geodesic_distance((1.0, 0.0), (1.0, math.pi)) == pytest.approx(
            2.0, rel=1e-12)

    def test_frozen_law_of_cosines(self):
        assert geodesic_distance((0.7, 0.3), (1.2, 2.1)) == pytest.approx(
            1.5810197366280814, rel=1e-12)

    def test_symmetry_and_triangle_on_random_triples(self, rng):
        rho = rng.uniform(0.0, 6.0, size=(1000, 3))
        theta = rng.uniform(0.0, 2.0 * math.pi, size=(1000, 3))
        x = (rho[:, 0], theta[:, 0])
        y = (rho[:, 1], theta[:, 1])
        z = (rho[:, 2], theta[:, 2])
        dxy = geodesic_distance(x, y)
        dyx = geodesic_distance(y, x)
        dxz = geodesic_distance(x, z)
        dzy = geodesic_distance(z, y)
        assert np.allclose(dxy, dyx, rtol=0.0, atol=1e-12)
        assert np.all(dxy <= dxz + dzy + 1e-12)

    def test_nearly_coincident_points_stay_finite(self):
        d = geodesic_distance((2.0, 1.0), (2.0, 1.0 + 1e-16))
        assert np.isfinite(d) and d >= 0.0


class TestVolumeDensity:
    def test_origin(self):
        assert volume_density(0.0, 2) == 0.0

    def test_h2(self):
        assert volume_density(1.0, 2) == pytest.approx(
            1.1752011936438015, rel=1e-15)

    def test_h3(self):
        assert volume_density(1.0, 3) == pytest.approx(
            math.sinh(1.0) ** 2, rel=1e-15)

    def test_rejects_low_dimension(self):
        with pytest.raises(ValueError):
            volume_density(1.0, 1)


class TestPolarGrid:
    def test_weights_sum_to_ball_area(self, desk_grid):
        assert desk_grid.area() == pytest.approx(AREA_8, rel=1e-12)
        assert float(np.sum(desk_grid.quad_weights)) == pytest.approx(
            desk_grid.area(), rel=1e-6)

    def test_nodes_shape_and_order(self, desk_grid):
        assert np.all(desk_grid.rho_nodes > 0.0)
        assert np.all(np.diff(desk_grid.rho_nodes) > 0.0)
        gaps = np.diff(desk_grid.theta_nodes)
        assert np.allclose(gaps, desk_grid.dtheta, rtol=0.0, atol=1e-15)

    def test_constructor_validation(self):
        with pytest.raises(ValueError):
            PolarGrid(8.0, 64, 64, 4)
        with pytest.raises(ValueError):
            PolarGrid(-1.0, 64, 64, 2)
        with pytest.raises(ValueError):
            PolarGrid(8.0, 4, 64, 2)
        with pytest.raises(ValueError):
            PolarGrid(8.0, 64, 63, 2)

    def test_area_closed_form_is_planar_only(self):
        g3 = PolarGrid(8.0, 16, 16, 3)
        with pytest.raises(ValueError):
            g3.area()

    def test_signature(self, desk_grid):
        assert desk_grid.signature() == (2, 8.0, 64, 128)


class TestLpNorm:
    def test_zero_field(self, desk_grid):
        zero = ScalarField(desk_grid, np.zeros((64, 128)))
        for p in (1.0, 2.0, 4.0):
            assert lp_norm(zero, p) == 0.0

    def test_indicator_recovers_area(self, desk_grid):
        one = ScalarField(desk_grid, np.ones((64, 128)))
        assert lp_norm(one, 1.0) == pytest.approx(desk_grid.area(), rel=1e-6)

    def test_radial_bump_against_quadrature(self, desk_grid):
        f = ScalarField.from_function(
            desk_grid, lambda r, th: np.exp(-((r - 2.0) ** 2)))
        got = lp_norm(f, 2.0)
        assert got == pytest.approx(BUMP_L2, rel=1e-4)
        radial, _ = quad(lambda r: np.exp(-2.0 * (r - 2.0) ** 2) * np.sinh(r),
                         0.0, desk_grid.rho_max)
        assert got == pytest.approx(math.sqrt(2.0 * math.pi * radial), rel=1e-4)

    def test_homogeneity(self, desk_grid, rng):
        f = random_scalar(desk_grid, rng)
        base = lp_norm(f, 3.0)
        for c in (2.0, -0.75, 1e-6, 3.5e4):
            scaled = ScalarField(desk_grid, c * f.values)
            assert lp_norm(scaled, 3.0) == pytest.approx(
                abs(c) * base, rel=1e-12)

    def test_truncation_monotonicity(self):
        norms = []
        for rho_max in (6.0, 8.0, 10.0):
            g = PolarGrid(rho_max, 64, 32, 2)
            f = ScalarField.from_function(
                g, lambda r, th: np.exp(-((r - 2.0) ** 2)))
            norms.append(lp_norm(f, 2.0))
        assert norms[0] <= norms[1] + 1e-10
        assert norms[1] <= norms[2] + 1e-10

    def test_one_form_uses_frame_norm(self, desk_grid, rng):
        u = random_oneform(desk_grid, rng)
        manual = float(np.sum(
            (u.comp_rho**2 + u.comp_theta**2) * desk_grid.quad_weights)) ** 0.5
        assert lp_norm(u, 2.0) == pytest.approx(manual, rel=1e-13)

    def test_rejects_bad_exponent(self, desk_grid):
        f = ScalarField(desk_grid, np.ones((64, 128)))
        with pytest.raises(ValueError):
            lp_norm(f, 0.5)
        with pytest.raises(ValueError):
            lp_norm(f, math.inf)


class TestSharpFlat:
    def test_componentwise_identity(self, desk_grid, rng):
        u = random_oneform(desk_grid, rng)
        v = sharp_flat(u)
        assert np.array_equal(v.comp_rho, u.comp_rho)
        assert np.array_equal(v.comp_theta, u.comp_theta)

    def test_zero_form(self, desk_grid):
        z = OneForm(desk_grid, np.zeros((64, 128)), np.zeros((64, 128)))
        v = sharp_flat(z)
        assert not np.any(v.comp_rho) and not np.any(v.comp_theta)

    def test_round_trip_is_involution(self, desk_grid, rng):
        u = random_oneform(desk_grid, rng)
        w = sharp_flat(sharp_flat(u))
        assert np.array_equal(w.comp_rho, u.comp_rho)
        assert np.array_equal(w.comp_theta, u.comp_theta)
        assert w.divergence_free == u.divergence_free


class TestFieldContainers:
    def test_scalar_shape_validation(self, desk_grid):
        with pytest.raises(ValueError):
            ScalarField(desk_grid, np.zeros((8, 8)))

    def test_oneform_shape_validation(self, desk_grid):
        with pytest.raises(ValueError):
            OneForm(desk_grid, np.zeros((64, 128)), np.zeros((8, 8)))

    def test_from_cartesian_matches_polar_composition(self, desk_grid):
        # x^2 + y^2 = sinh^2(rho), so 1/(1 + x^2 + y^2) = 1/cosh^2(rho)
        f = ScalarField.from_cartesian(
            desk_grid, lambda x, y: 1.0 / (1.0 + x**2 + y**2))
        g = ScalarField.from_function(
            desk_grid, lambda r, th: 1.0 / np.cosh(r) ** 2)
        assert np.allclose(f.values, g.values, rtol=1e-12, atol=0.0)


class TestSupportChecks:
    def test_inner_bump_passes(self, desk_grid):
        f = ScalarField.from_function(
            desk_grid, lambda r, th: np.exp(-((r - 2.0) ** 2)))
        check_support(f.values, desk_grid)

    def test_outer_mass_rejected(self, desk_grid):
        f = ScalarField.from_function(
            desk_grid, lambda r, th: np.exp(-((r - desk_grid.rho_max) ** 2)))
        with pytest.raises(SupportError, match="safe radius"):
            check_support(f.values, desk_grid, what="boundary bump")

    def test_zero_field_passes(self, desk_grid):
        check_support(np.zeros((64, 128)), desk_grid)
