"""One-form semigroup checks: stream reduction, both sectors, gradients.

Oracle policy: the radial closed form psi = e^{-rho^2} is differentiated
symbolically (sympy) for the stream and covariant-gradient oracles; the
semigroup itself is checked against its defining reduction (prefactor
times scalar flow), against the scalar-domination inequality, and route
against route (finite-difference vs kernel-differentiated gradients,
exact-sector flow vs evolved Laplacian).
"""

import numpy as np
import pytest
import sympy as sp

from conftest import random_divfree, random_oneform, random_scalar
from hypflow import (
    KERNEL_MIN_TIME,
    OneForm,
    ScalarField,
    SupportError,
    apply_L_semigroup_divfree,
    apply_L_semigroup_exact,
    apply_scalar_semigroup,
    codifferential,
    covariant_gradient,
    lp_norm,
    recover_stream,
    stream_to_oneform,
)


def _l2(grid, values):
    return float(np.sqrt(np.sum(values**2 * grid.quad_weights)))


def _form_gap(a, b):
    return _l2(a.grid, np.hypot(a.comp_rho - b.comp_rho,
                                a.comp_theta - b.comp_theta))


def _radial_profiles():
    """Symbolic u = star d psi for psi = e^{-rho^2} and its gradient rows."""
    rho = sp.symbols("rho", positive=True)
    psi = sp.exp(-(rho**2))
    b = sp.diff(psi, rho)                      # u_theta
    t12 = sp.diff(b, rho)                      # d_rho u_theta
    t21 = -b * sp.cosh(rho) / sp.sinh(rho)     # -u_theta coth(rho)
    return [sp.lambdify(rho, expr, "numpy") for expr in (b, t12, t21)]


class TestStreamToOneform:
    def test_zero_stream(self, desk_grid):
        u = stream_to_oneform(ScalarField(desk_grid, np.zeros((64, 128))))
        assert not np.any(u.comp_rho) and not np.any(u.comp_theta)
        assert u.divergence_free

    def test_radial_stream(self, desk_grid):
        psi = ScalarField.from_function(
            desk_grid, lambda r, th: np.exp(-(r**2)))
        u = stream_to_oneform(psi)
        b_fn, _, _ = _radial_profiles()
        exact = np.repeat(b_fn(desk_grid.rho_nodes)[:, None], 128, axis=1)
        assert np.max(np.abs(u.comp_rho)) < 1e-10
        assert _l2(desk_grid, u.comp_theta - exact) < 1e-3 * _l2(desk_grid, exact)

    def test_divergence_free_certificate(self, desk_grid, rng):
        for _ in range(5):
            u = stream_to_oneform(random_scalar(desk_grid, rng))
            assert u.divergence_free
            assert lp_norm(codifferential(u), 2) < 1e-6 * lp_norm(u, 2)

    def test_support_violation(self, desk_grid):
        psi = ScalarField.from_function(
            desk_grid,
            lambda r, th: np.exp(-((r - desk_grid.rho_max) ** 2)))
        with pytest.raises(SupportError):
            stream_to_oneform(psi)

    def test_stream_recovery_roundtrip(self, desk_grid, rng):
        psi = random_scalar(desk_grid, rng)
        u = stream_to_oneform(psi)
        rec = recover_stream(u)
        assert _l2(desk_grid, rec.values - psi.values) < 1e-8 * _l2(
            desk_grid, psi.values)


class TestDivfreeSemigroup:
    def test_zero_form(self, desk_grid):
        zero = OneForm(desk_grid, np.zeros((64, 128)), np.zeros((64, 128)),
                       divergence_free=True)
        out = apply_L_semigroup_divfree(zero, 1.0)
        assert not np.any(out.comp_rho) and not np.any(out.comp_theta)

    def test_strong_continuity(self, desk_grid, rng):
        u = random_divfree(desk_grid, rng)
        norm = lp_norm(u, 2)
        gaps = [_form_gap(apply_L_semigroup_divfree(u, t), u) / norm
                for t in (1e-1, 1e-2, 1e-3)]
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 0.05

    def test_prefactor_decay_bound(self, desk_grid, rng):
        u = random_divfree(desk_grid, rng)
        norm = lp_norm(u, 2)
        for t in (0.1, 1.0, 3.0):
            evolved = apply_L_semigroup_divfree(u, t)
            assert lp_norm(evolved, 2) <= np.exp(-2.0 * t) * norm * (1.0 + 1e-3)

    @pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
    def test_lp_contractivity(self, desk_grid, rng, p):
        u = random_divfree(desk_grid, rng)
        base = lp_norm(u, p)
        for t in (0.1, 1.0, 3.0):
            assert lp_norm(apply_L_semigroup_divfree(u, t), p) <= (
                1.0 + 1e-6) * base

    def test_divergence_preserved(self, desk_grid, rng):
        u = random_divfree(desk_grid, rng)
        for t in (0.1, 1.0):
            evolved = apply_L_semigroup_divfree(u, t)
            assert evolved.divergence_free
            assert lp_norm(codifferential(evolved), 2) < 1e-5 * lp_norm(
                evolved, 2)

    def test_semigroup_law(self, desk_grid, rng):
        u = random_divfree(desk_grid, rng)
        two = apply_L_semigroup_divfree(apply_L_semigroup_divfree(u, 0.6), 0.4)
        one = apply_L_semigroup_divfree(u, 1.0)
        assert _form_gap(two, one) < 1e-3 * lp_norm(u, 2)

    def test_pointwise_domination(self, desk_grid, rng):
        u = random_divfree(desk_grid, rng)
        mag = ScalarField(desk_grid, u.pointwise_norm())
        for t in (0.2, 1.0):
            lhs = np.exp(t) * apply_L_semigroup_divfree(u, t).pointwise_norm()
            rhs = apply_scalar_semigroup(mag, t).values
            assert np.all(lhs <= rhs + 1e-6)

    def test_kernel_route_matches_fd_route(self, desk_grid, rng):
        u = random_divfree(desk_grid, rng)
        norm = lp_norm(u, 2)
        for t in (0.1, 0.5):
            a = apply_L_semigroup_divfree(u, t, method="fd")
            b = apply_L_semigroup_divfree(u, t, method="kernel")
            assert _form_gap(a, b) < 1e-3 * norm

    def test_stream_recovered_when_missing(self, desk_grid, rng):
        u = random_divfree(desk_grid, rng)
        bare = OneForm(desk_grid, u.comp_rho.copy(), u.comp_theta.copy())
        a = apply_L_semigroup_divfree(bare, 0.5)
        b = apply_L_semigroup_divfree(u, 0.5)
        assert _form_gap(a, b) < 1e-10 * lp_norm(u, 2)

    def test_rejects_bad_inputs(self, desk_grid, rng):
        u = random_divfree(desk_grid, rng)
        with pytest.raises(ValueError):
            apply_L_semigroup_divfree(u, 0.0)
        with pytest.raises(ValueError):
            apply_L_semigroup_divfree(u, 1.0, method="magic")
        with pytest.raises(ValueError):
            apply_L_semigroup_divfree(u, 0.5 * KERNEL_MIN_TIME,
                                      method="kernel")
        not_divfree = random_oneform(desk_grid, rng)
        with pytest.raises(ValueError, match="stream"):
            apply_L_semigroup_divfree(not_divfree, 1.0)


class TestExactSemigroup:
    def test_zero_potential(self, desk_grid):
        out = apply_L_semigroup_exact(
            ScalarField(desk_grid, np.zeros((64, 128))), 1.0)
        assert not np.any(out.comp_rho) and not np.any(out.comp_theta)

    def test_codifferential_dual_route(self, desk_grid, rng):
        # d*(e^{tL} d phi) must equal e^{-2t} e^{2t Delta}(-Delta phi):
        # both sides evaluated by structurally different pipelines.
        phi = random_scalar(desk_grid, rng)
        minus_lap = ScalarField(
            desk_grid, -desk_grid.scalar_laplacian(phi.values))
        for t in (0.2, 0.5):
            lhs = codifferential(apply_L_semigroup_exact(phi, t)).values
            rhs = np.exp(-2.0 * t) * apply_scalar_semigroup(
                minus_lap, 2.0 * t).values
            assert _l2(desk_grid, lhs - rhs) < 1e-3 * _l2(desk_grid, rhs)

    def test_linearity(self, desk_grid, rng):
        phi1 = random_scalar(desk_grid, rng)
        phi2 = random_scalar(desk_grid, rng)
        both = apply_L_semigroup_exact(
            ScalarField(desk_grid, phi1.values + phi2.values), 0.3)
        a = apply_L_semigroup_exact(phi1, 0.3)
        b = apply_L_semigroup_exact(phi2, 0.3)
        parts = OneForm(desk_grid, a.comp_rho + b.comp_rho,
                        a.comp_theta + b.comp_theta)
        assert _form_gap(both, parts) < 1e-12 * lp_norm(parts, 2)

    def test_rejects_bad_time(self, desk_grid):
        phi = ScalarField(desk_grid, np.zeros((64, 128)))
        with pytest.raises(ValueError):
            apply_L_semigroup_exact(phi, -1.0)


class TestCovariantGradient:
    def test_zero_form(self, desk_grid):
        zero = OneForm(desk_grid, np.zeros((64, 128)), np.zeros((64, 128)))
        T = covariant_gradient(zero)
        for comp in (T.t11, T.t12, T.t21, T.t22):
            assert not np.any(comp)

    def test_radial_stream_against_symbolic_oracle(self, desk_grid):
        psi = ScalarField.from_function(
            desk_grid, lambda r, th: np.exp(-(r**2)))
        u = stream_to_oneform(psi)
        T = covariant_gradient(u)
        _, t12_fn, t21_fn = _radial_profiles()
        t12 = np.repeat(t12_fn(desk_grid.rho_nodes)[:, None], 128, axis=1)
        t21 = np.repeat(t21_fn(desk_grid.rho_nodes)[:, None], 128, axis=1)
        # u_rho = 0, u_theta radial: the diagonal rows vanish identically
        assert np.max(np.abs(T.t11)) < 1e-9
        assert np.max(np.abs(T.t22)) < 1e-9
        # t12 carries two stacked difference applications, t21 one
        assert _l2(desk_grid, T.t12 - t12) < 4e-3 * _l2(desk_grid, t12)
        assert _l2(desk_grid, T.t21 - t21) < 1e-3 * _l2(desk_grid, t21)

    def test_scaling(self, desk_grid, rng):
        u = random_oneform(desk_grid, rng)
        T = covariant_gradient(u)
        scaled = covariant_gradient(
            OneForm(desk_grid, 3.5 * u.comp_rho, 3.5 * u.comp_theta))
        for a, b in ((scaled.t11, T.t11), (scaled.t12, T.t12),
                     (scaled.t21, T.t21), (scaled.t22, T.t22)):
            assert np.allclose(a, 3.5 * b, rtol=1e-12, atol=1e-12)

    def test_frobenius_norm_is_frame_norm(self, desk_grid, rng):
        u = random_oneform(desk_grid, rng)
        T = covariant_gradient(u)
        manual = np.sqrt(T.t11**2 + T.t12**2 + T.t21**2 + T.t22**2)
        assert np.array_equal(T.pointwise_norm(), manual)
