"""Shared fixtures: grids, random smooth fields, session-scoped solves.

Operator laws run on the desk grid (64 x 128); trajectory work runs on
the solver grid (48 x 64) where the Picard solves live.  The desk grid
carries twice the angular resolution because ring kernels narrow like
1/sinh(rho) in the angle, and the semigroup-law tolerance needs them
resolved out to mid radii.  Random fields are Gaussian-bump mixtures in
the hyperboloid chart, so they are smooth across the polar axis and
numerically compactly supported well inside the safe radius.
"""

import numpy as np
import pytest

from hypflow import (
    DecayConstants,
    OneForm,
    PolarGrid,
    ScalarField,
    SolverConfig,
    apply_L_semigroup_divfree,
    apply_L_semigroup_exact,
    codifferential,
    green_inverse_laplacian,
    make_datum,
    picard_solve,
    project,
    stream_to_oneform,
)

SEED = 20260814
DELTA = 0.5
AMPLITUDE = 0.25


@pytest.fixture(scope="session")
def desk_grid():
    return PolarGrid(8.0, 64, 128, 2)


@pytest.fixture(scope="session")
def solver_grid():
    return PolarGrid(8.0, 48, 64, 2)


@pytest.fixture(scope="session")
def constants():
    return DecayConstants(2)


@pytest.fixture()
def rng():
    return np.random.default_rng(SEED)


def random_scalar(grid, rng, n_bumps=3, amplitude=1.0):
    """Smooth compactly supported scalar: random Gaussian mix in the chart."""
    params = [(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
               rng.uniform(0.6, 1.5), rng.standard_normal())
              for _ in range(n_bumps)]

    def fn(x, y):
        out = np.zeros_like(x)
        for cx, cy, width, amp in params:
            out += amp * np.exp(-((x - cx) ** 2 + (y - cy) ** 2)
                                / (2.0 * width * width))
        return out

    f = ScalarField.from_cartesian(grid, fn)
    return ScalarField(grid, amplitude * f.values)


def random_divfree(grid, rng, amplitude=1.0):
    """Random smooth divergence-free one-form via a stream potential."""
    return stream_to_oneform(random_scalar(grid, rng, amplitude=amplitude))


def random_oneform(grid, rng, amplitude=1.0):
    """Random smooth one-form with no structural constraint."""
    f_rho = random_scalar(grid, rng, amplitude=amplitude)
    f_theta = random_scalar(grid, rng, amplitude=amplitude)
    return OneForm(grid, f_rho.values, f_theta.values)


def apply_L_general(w, t):
    """Semigroup on an arbitrary one-form, by exact + coexact splitting.

    The coexact part is the projection, the exact part is the gradient
    of the inverted codifferential; each evolves on its own branch and
    the pieces are summed.  This is the reference evaluation the
    commutation checks compare the projection against.
    """
    coexact = apply_L_semigroup_divfree(project(w), t)
    potential = green_inverse_laplacian(codifferential(w),
                                        enforce_support=False)
    exact = apply_L_semigroup_exact(
        ScalarField(w.grid, potential.values), t)
    return OneForm(w.grid, coexact.comp_rho + exact.comp_rho,
                   coexact.comp_theta + exact.comp_theta)


@pytest.fixture(scope="session")
def datum(solver_grid):
    return make_datum(solver_grid, AMPLITUDE, 2)


@pytest.fixture(scope="session")
def horizon(constants):
    return 5.0 / constants.beta_prime(DELTA)


@pytest.fixture(scope="session")
def solved(datum, horizon):
    """The standard small-data run on the default J = 32 lattice."""
    return picard_solve(datum, horizon, SolverConfig())


@pytest.fixture(scope="session")
def solved_fine(datum, horizon):
    """Time-refined partner (J = 64): stability studies and small-t probes."""
    return picard_solve(datum, horizon, SolverConfig(n_lattice=64))
