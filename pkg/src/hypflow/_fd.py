"""Finite-difference machinery shared by the geometry operators.

Radial nodes are non-uniform (Gauss-Legendre), so radial derivative
matrices are assembled row by row from Fornberg interpolation weights on
sliding 5-point stencils.  Angular nodes are uniform and periodic, so the
angular matrices are 4th-order circulants.
"""

from __future__ import annotations

import numpy as np

__all__ = ["fornberg_weights", "diff_matrix_nonuniform", "diff_matrix_periodic"]


def fornberg_weights(x0: float, nodes: np.ndarray, order: int) -> np.ndarray:
    """Weights of the `order`-th derivative at `x0` from samples at `nodes`.

    Classic Fornberg recursion; exact for polynomials up to degree
    ``len(nodes) - 1``.
    """
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    if order >= n:
        raise ValueError("need more nodes than the derivative order")
    c = np.zeros((n, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = nodes[0] - x0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            for k in range(mn, 0, -1):
                c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
            c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def diff_matrix_nonuniform(nodes: np.ndarray, order: int = 1, stencil: int = 5) -> np.ndarray:
    """Dense derivative matrix on arbitrary increasing nodes.

    Interior rows use centered `stencil`-point windows; rows near either
    end slide the window inward (one-sided differences).
    """
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    if stencil > n:
        stencil = n
    half = stencil // 2
    D = np.zeros((n, n))
    for i in range(n):
        lo = min(max(i - half, 0), n - stencil)
        D[i, lo:lo + stencil] = fornberg_weights(nodes[i], nodes[lo:lo + stencil], order)
    return D


def diff_matrix_periodic(n: int, dx: float, order: int = 1) -> np.ndarray:
    """Dense circulant derivative matrix, 4th-order accurate, period n*dx."""
    if order == 1:
        offsets = np.array([-2, -1, 1, 2])
        coef = np.array([1.0 / 12.0, -2.0 / 3.0, 2.0 / 3.0, -1.0 / 12.0]) / dx
    elif order == 2:
        offsets = np.array([-2, -1, 0, 1, 2])
        coef = np.array([-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0]) / dx**2
    else:
        raise ValueError("only first and second angular derivatives are built")
    D = np.zeros((n, n))
    for off, c in zip(offsets, coef):
        D[np.arange(n), (np.arange(n) + off) % n] += c
    return D
