"""Discrete model of the hyperbolic plane in geodesic polar coordinates.

A :class:`PolarGrid` fixes a base point and discretizes the geodesic ball
of radius ``rho_max`` with Gauss-Legendre radial nodes and uniform angular
nodes.  The volume element ``sinh^{n-1}(rho) drho dtheta`` is folded into
per-node quadrature weights, so every integral over the manifold is a
plain weighted sum.

All 1-form components are stored in the orthonormal coframe
``{drho, sinh(rho) dtheta}``.  In that frame the musical isomorphisms act
componentwise and pointwise norms are Euclidean.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from ._fd import diff_matrix_nonuniform, diff_matrix_periodic

__all__ = [
    "PolarGrid",
    "GridPoint",
    "ScalarField",
    "OneForm",
    "SupportError",
    "geodesic_distance",
    "volume_density",
    "lp_norm",
    "sharp_flat",
]

# Fields fed to global (convolution / inversion) operators must be
# negligible within this L2 fraction outside the safe radius.
SUPPORT_TOLERANCE = 1.0e-3


class SupportError(ValueError):
    """A field carries non-negligible mass near the truncation boundary."""


class GridPoint(NamedTuple):
    rho: float
    theta: float


def volume_density(rho, n_dim: int):
    """Radial density sinh^{n-1}(rho) of the volume element."""
    if n_dim < 2:
        raise ValueError("n_dim must be at least 2")
    return np.sinh(rho) ** (n_dim - 1)


def geodesic_distance(x, y):
    """Geodesic distance via the hyperbolic law of cosines.

    Accepts :class:`GridPoint` instances or (rho, theta) pairs; broadcasts
    over array-valued coordinates.
    """
    rho1, th1 = x
    rho2, th2 = y
    arg = np.cosh(rho1) * np.cosh(rho2) - np.sinh(rho1) * np.sinh(rho2) * np.cos(th1 - th2)
    # Rounding can push the argument below 1 for nearly coincident points.
    return np.arccosh(np.maximum(arg, 1.0))


class PolarGrid:
    """Geodesic polar discretization of H^n about a base point.

    Parameters
    ----------
    rho_max : float
        Geodesic truncation radius.
    n_rho : int
        Number of radial nodes (Gauss-Legendre points mapped to
        ``(0, rho_max)``), at least 8.
    n_theta : int
        Number of uniform angular nodes, even and at least 8.
    n_dim : int
        2 for solver grids; 3 is admitted for kernel evaluation only.

    Notes
    -----
    Instances are immutable after construction; every derived operator
    (derivative matrices, pairwise distance tables) is built lazily and
    cached, so grids are safe to share across threads for reading.
    """

    def __init__(self, rho_max: float = 8.0, n_rho: int = 64, n_theta: int = 64,
                 n_dim: int = 2):
        if n_dim not in (2, 3):
            raise ValueError("n_dim must be 2 or 3")
        if rho_max <= 0:
            raise ValueError("rho_max must be positive")
        if n_rho < 8:
            raise ValueError("n_rho must be at least 8")
        if n_theta < 8 or n_theta % 2:
            raise ValueError("n_theta must be even and at least 8")
        self.n_dim = int(n_dim)
        self.rho_max = float(rho_max)
        self.n_rho = int(n_rho)
        self.n_theta = int(n_theta)

        x, w = np.polynomial.legendre.leggauss(self.n_rho)
        self.rho_nodes = 0.5 * self.rho_max * (x + 1.0)
        self.rho_weights = 0.5 * self.rho_max * w
        self.dtheta = 2.0 * np.pi / self.n_theta
        self.theta_nodes = self.dtheta * np.arange(self.n_theta)

        # One radial weight per node ring: GL weight * volume density * dtheta.
        self.ring_weights = self.rho_weights * volume_density(self.rho_nodes, self.n_dim) * self.dtheta
        self.quad_weights = np.broadcast_to(
            self.ring_weights[:, None], (self.n_rho, self.n_theta)).copy()
        self.quad_weights.setflags(write=False)
        self.rho_nodes.setflags(write=False)
        self.theta_nodes.setflags(write=False)

        # Fields driven through global operators must live inside this radius.
        self.safe_radius = self.rho_max - 3.0
        self._operator_cache: dict = {}

    # -- measure ---------------------------------------------------------

    def area(self) -> float:
        """Exact volume of the truncated ball (n = 2 only)."""
        if self.n_dim != 2:
            raise ValueError("closed-form area is provided for n = 2 only")
        return 2.0 * np.pi * (np.cosh(self.rho_max) - 1.0)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values * self.quad_weights))

    # -- coordinate helpers ----------------------------------------------

    @cached_property
    def rho_mesh(self) -> np.ndarray:
        m = np.broadcast_to(self.rho_nodes[:, None], (self.n_rho, self.n_theta)).copy()
        m.setflags(write=False)
        return m

    @cached_property
    def theta_mesh(self) -> np.ndarray:
        m = np.broadcast_to(self.theta_nodes[None, :], (self.n_rho, self.n_theta)).copy()
        m.setflags(write=False)
        return m

    @cached_property
    def sinh_rho(self) -> np.ndarray:
        v = np.sinh(self.rho_nodes)
        v.setflags(write=False)
        return v

    @cached_property
    def coth_rho(self) -> np.ndarray:
        v = np.cosh(self.rho_nodes) / np.sinh(self.rho_nodes)
        v.setflags(write=False)
        return v

    # -- pairwise geometry -----------------------------------------------

    @cached_property
    def distance_lag_table(self) -> np.ndarray:
        """d[i, j, k] = distance between (rho_i, theta) and (rho_j, theta - theta_k).

        By rotational symmetry pairwise distances depend on the angular lag
        only, which is what makes all radial-kernel operators block
        circulant in theta.
        """
        ci = np.cosh(self.rho_nodes)
        si = np.sinh(self.rho_nodes)
        cos_lag = np.cos(self.theta_nodes)
        arg = (ci[:, None, None] * ci[None, :, None]
               - si[:, None, None] * si[None, :, None] * cos_lag[None, None, :])
        d = np.arccosh(np.maximum(arg, 1.0))
        d.setflags(write=False)
        return d

    # -- derivative matrices ----------------------------------------------

    @cached_property
    def D_rho(self) -> np.ndarray:
        """4th-order radial first-derivative matrix on the GL nodes."""
        D = diff_matrix_nonuniform(self.rho_nodes, order=1, stencil=5)
        D.setflags(write=False)
        return D

    @cached_property
    def D_theta(self) -> np.ndarray:
        """4th-order periodic angular first-derivative matrix."""
        D = diff_matrix_periodic(self.n_theta, self.dtheta, order=1)
        D.setflags(write=False)
        return D

    def d_rho(self, values: np.ndarray) -> np.ndarray:
        return self.D_rho @ values

    def d_theta(self, values: np.ndarray) -> np.ndarray:
        return values @ self.D_theta.T

    def scalar_laplacian(self, values: np.ndarray) -> np.ndarray:
        """Laplace-Beltrami operator as a composition of first derivatives.

        (1/sinh) d_rho(sinh d_rho f) + (1/sinh^2) d_theta^2 f; matches the
        operator inverted by the projection module, so the two stay
        mutually consistent to rounding.
        """
        s = self.sinh_rho[:, None]
        return (self.d_rho(s * self.d_rho(values)) + self.d_theta(self.d_theta(values)) / s) / s

    # -- misc --------------------------------------------------------------

    def signature(self) -> tuple:
        return (self.n_dim, self.rho_max, self.n_rho, self.n_theta)

    def __repr__(self) -> str:  # pragma: no cover
        return (f"PolarGrid(n_dim={self.n_dim}, rho_max={self.rho_max}, "
                f"n_rho={self.n_rho}, n_theta={self.n_theta})")


@dataclass
class ScalarField:
    """Real values sampled on a :class:`PolarGrid`."""

    grid: PolarGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_rho, self.grid.n_theta):
            raise ValueError("values shape does not match the grid")

    @classmethod
    def from_function(cls, grid: PolarGrid, fn) -> "ScalarField":
        return cls(grid, fn(grid.rho_mesh, grid.theta_mesh))

    @classmethod
    def from_cartesian(cls, grid: PolarGrid, fn) -> "ScalarField":
        """Sample fn(X, Y) in the hyperboloid chart X = sinh(rho) cos(theta),
        Y = sinh(rho) sin(theta).

        Smoothness caveat that polar coordinates hide: a function is
        smooth across the axis only if its m-th angular mode vanishes
        like rho^m there.  Arbitrary smooth-looking expressions in
        (rho, theta) usually violate this and carry a hidden conical
        singularity whose Laplacian blows up like 1/rho^2; anything
        built as a smooth function of (X, Y) satisfies it
        automatically.  Generator-based evaluations (Taylor and expm
        semigroup branches, iterated Laplacians) require data built
        this way.
        """
        x = np.sinh(grid.rho_mesh) * np.cos(grid.theta_mesh)
        y = np.sinh(grid.rho_mesh) * np.sin(grid.theta_mesh)
        return cls(grid, fn(x, y))

    def pointwise_norm(self) -> np.ndarray:
        return np.abs(self.values)

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


@dataclass
class OneForm:
    """1-form on a :class:`PolarGrid`, components in the orthonormal coframe.

    ``comp_rho`` multiplies ``drho`` and ``comp_theta`` multiplies
    ``sinh(rho) dtheta``.  ``stream`` optionally caches the scalar whose
    rotated gradient reproduces the form; divergence-free constructors and
    the solver keep it populated to avoid re-inversion.
    """

    grid: PolarGrid
    comp_rho: np.ndarray
    comp_theta: np.ndarray
    divergence_free: bool = False
    stream: np.ndarray | None = None

    def __post_init__(self):
        self.comp_rho = np.asarray(self.comp_rho, dtype=float)
        self.comp_theta = np.asarray(self.comp_theta, dtype=float)
        shape = (self.grid.n_rho, self.grid.n_theta)
        if self.comp_rho.shape != shape or self.comp_theta.shape != shape:
            raise ValueError("component shape does not match the grid")

    def pointwise_norm(self) -> np.ndarray:
        return np.hypot(self.comp_rho, self.comp_theta)

    def copy(self) -> "OneForm":
        return OneForm(self.grid, self.comp_rho.copy(), self.comp_theta.copy(),
                       self.divergence_free,
                       None if self.stream is None else self.stream.copy())


def lp_norm(f, p: float) -> float:
    """L^p norm with the sinh-weighted measure.

    Works for any field object exposing ``grid`` and ``pointwise_norm()``;
    1-forms use the frame norm sqrt(f_rho^2 + f_theta^2) pointwise.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    mag = f.pointwise_norm()
    w = f.grid.quad_weights
    if np.isinf(p):
        raise ValueError("only finite p is supported")
    return float(np.sum(mag**p * w) ** (1.0 / p))


def sharp_flat(u: OneForm) -> OneForm:
    """Musical isomorphism.  Componentwise identity in the orthonormal frame."""
    return OneForm(u.grid, u.comp_rho, u.comp_theta, u.divergence_free, u.stream)


def check_support(values: np.ndarray, grid: PolarGrid, what: str = "field") -> None:
    """Raise :class:`SupportError` if the outer band carries real L2 mass."""
    outside = grid.rho_nodes > grid.safe_radius
    if not np.any(outside):
        return
    w = grid.quad_weights
    total = np.sum(values**2 * w)
    if total == 0.0:
        return
    tail = np.sum((values[outside, :] ** 2) * w[outside, :])
    if tail > SUPPORT_TOLERANCE**2 * total:
        raise SupportError(
            f"{what} has relative L2 mass {np.sqrt(tail / total):.2e} beyond "
            f"the safe radius {grid.safe_radius:.2f}")
